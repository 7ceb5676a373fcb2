"""Encoder backends behind one small contract.

An encoder exposes ``dimension``, ``encode_texts(phrases) -> (n, d)``, and
``encode_images(paths) -> (n, d)``, both float32. The pretrained backend
wraps a CLIP checkpoint; the hashed backend derives a stable unit vector
from the content alone, which keeps tests and demo exports fully offline
and exactly reproducible.
"""
from __future__ import annotations

import hashlib

import numpy as np

from .errors import ModelLoadError


class HashedEncoder:
    """Content-addressed pseudo-embeddings: same input, same vector, anywhere."""

    def __init__(self, dimension: int = 512):
        self.dimension = dimension

    def _vector(self, payload: bytes) -> np.ndarray:
        digest = hashlib.sha256(payload).digest()
        seed = int.from_bytes(digest[:8], "little")
        rng = np.random.default_rng(seed)
        vec = rng.standard_normal(self.dimension)
        return (vec / np.linalg.norm(vec)).astype(np.float32)

    def encode_texts(self, phrases) -> np.ndarray:
        return np.stack([self._vector(("text:" + p).encode("utf-8"))
                         for p in phrases])

    def encode_images(self, paths) -> np.ndarray:
        from PIL import Image

        out = []
        for path in paths:
            with Image.open(path) as img:
                payload = img.convert("RGB").tobytes()
            out.append(self._vector(b"image:" + payload))
        return np.stack(out)


class ClipEncoder:
    """Pretrained CLIP backend (requires downloadable or cached weights)."""

    def __init__(self, model_name: str = "openai/clip-vit-base-patch32",
                 batch_size: int = 16):
        try:
            import torch  # noqa: F401
            from transformers import CLIPModel, CLIPProcessor

            self._model = CLIPModel.from_pretrained(model_name)
            self._processor = CLIPProcessor.from_pretrained(model_name)
        except Exception as exc:  # noqa: BLE001 - contract error at the boundary
            raise ModelLoadError(f"cannot load {model_name!r}: {exc}") from exc
        self._model.eval()
        self.batch_size = batch_size
        self.dimension = int(self._model.config.projection_dim)

    def encode_texts(self, phrases) -> np.ndarray:
        import torch

        chunks = []
        with torch.no_grad():
            for i in range(0, len(phrases), self.batch_size):
                batch = list(phrases[i : i + self.batch_size])
                inputs = self._processor(text=batch, return_tensors="pt",
                                         padding=True, truncation=True)
                feats = self._model.get_text_features(**inputs)
                chunks.append(feats.cpu().numpy().astype(np.float32))
        return np.concatenate(chunks)

    def encode_images(self, paths) -> np.ndarray:
        import torch
        from PIL import Image

        chunks = []
        with torch.no_grad():
            for i in range(0, len(paths), self.batch_size):
                images = [Image.open(p).convert("RGB")
                          for p in paths[i : i + self.batch_size]]
                inputs = self._processor(images=images, return_tensors="pt")
                feats = self._model.get_image_features(**inputs)
                chunks.append(feats.cpu().numpy().astype(np.float32))
        return np.concatenate(chunks)


def make_encoder(model: str, dimension: int | None = None):
    """'hashed' or a CLIP checkpoint name."""
    if model == "hashed":
        return HashedEncoder(dimension or 512)
    return ClipEncoder(model)
