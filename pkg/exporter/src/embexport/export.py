"""Export pipeline: manifest -> encoder -> binary store file.

The output is bit-exact to the engine's store format (little endian):

    magic "CNSLEMB1" | version u32 | dimension u32 | count u64 |
    count * [key_len u32 | key utf-8 | dimension * f32]

Vectors are written unnormalized, exactly as the encoder produced them.
"""
from __future__ import annotations

import struct

import numpy as np

from .errors import ManifestError, WriteError
from .manifest import ExportManifest

MAGIC = b"CNSLEMB1"
FORMAT_VERSION = 1


def write_store(path, dimension: int, items) -> None:
    """items: iterable of (key, float32 vector)."""
    items = list(items)
    try:
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<IIQ", FORMAT_VERSION, dimension, len(items)))
            for key, vec in items:
                data = key.encode("utf-8")
                fh.write(struct.pack("<I", len(data)))
                fh.write(data)
                fh.write(np.asarray(vec, dtype="<f4").tobytes())
    except OSError as exc:
        raise WriteError(f"cannot write {path}: {exc}") from exc


def export_store(manifest: ExportManifest, out_path, encoder) -> dict:
    """Encode every manifest entry and write the store file.

    Returns a summary with per-key squared norms (float64 of the f32
    vectors), which downstream round-trip checks compare against.
    """
    manifest.validate()
    if manifest.dimension is not None and manifest.dimension != encoder.dimension:
        raise ManifestError(
            f"manifest wants dimension {manifest.dimension}, encoder "
            f"produces {encoder.dimension}")

    texts = [e for e in manifest.entries if e.kind == "text"]
    images = [e for e in manifest.entries if e.kind == "image"]
    vectors: dict[str, np.ndarray] = {}
    if texts:
        feats = encoder.encode_texts([e.source for e in texts])
        for entry, vec in zip(texts, feats):
            vectors[entry.store_key()] = vec
    if images:
        feats = encoder.encode_images([e.source for e in images])
        for entry, vec in zip(images, feats):
            vectors[entry.store_key()] = vec

    ordered = [(e.store_key(), vectors[e.store_key()]) for e in manifest.entries]
    write_store(out_path, encoder.dimension, ordered)
    return {
        "count": len(ordered),
        "dimension": encoder.dimension,
        "squared_norms": {key: float(np.asarray(vec, dtype=np.float64) @
                                     np.asarray(vec, dtype=np.float64))
                          for key, vec in ordered},
    }
