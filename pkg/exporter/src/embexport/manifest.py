"""Export manifest: what to encode and under which store keys.

File format: one JSON object per line with fields
``{key, kind: "image"|"text", source, photo_prompt: bool}``. Text entries
with ``photo_prompt`` true are stored under the key prefix
"a photo of a ", matching the engine's lookup convention.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from .errors import ManifestError, MissingImage

PHOTO_PROMPT = "a photo of a "


@dataclass(frozen=True)
class ManifestEntry:
    key: str
    kind: str        # "image" | "text"
    source: str      # image file path, or the phrase itself for text
    photo_prompt: bool = False

    def store_key(self) -> str:
        if self.kind == "text" and self.photo_prompt:
            return PHOTO_PROMPT + self.key
        return self.key


@dataclass
class ExportManifest:
    entries: list = field(default_factory=list)
    dimension: int | None = None   # target dimension; encoder's when None
    model: str = "hashed"

    def validate(self) -> None:
        """Reject duplicates and missing images before any model call."""
        seen = set()
        for entry in self.entries:
            if entry.kind not in ("image", "text"):
                raise ManifestError(f"unknown kind {entry.kind!r} for {entry.key!r}")
            if not entry.key.strip():
                raise ManifestError("empty key")
            resolved = entry.store_key()
            if resolved in seen:
                raise ManifestError(f"duplicate key {resolved!r}")
            seen.add(resolved)
            if entry.kind == "image" and not os.path.exists(entry.source):
                raise MissingImage(entry.source)


def read_manifest(path, dimension=None, model="hashed") -> ExportManifest:
    entries = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                entries.append(ManifestEntry(
                    key=rec["key"], kind=rec["kind"], source=rec["source"],
                    photo_prompt=bool(rec.get("photo_prompt", False))))
            except (KeyError, ValueError) as exc:
                raise ManifestError(f"{path}:{lineno}: {exc}") from exc
    return ExportManifest(entries, dimension=dimension, model=model)
