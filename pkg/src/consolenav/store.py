"""Read-only embedding store plus the pooling and similarity kernels.

The store replaces live image/text encoders: every view image, landmark
phrase, and instruction string is a precomputed vector looked up by key.
Vectors are float32 on disk and promoted to float64 in memory so the loss
and gradient arithmetic downstream is testable at tight tolerances.

Binary layout (little endian, no padding):

    magic "CNSLEMB1" | version u32 | dimension u32 | count u64 |
    count * [key_len u32 | key utf-8 bytes | dimension * f32]
"""
from __future__ import annotations

import struct
import time
import unicodedata
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    DuplicateKey,
    EmptyInput,
    KeyNotFound,
    MalformedHeader,
    MixedDimensions,
)

MAGIC = b"CNSLEMB1"
FORMAT_VERSION = 1
PHOTO_PROMPT = "a photo of a "

_HEADER = struct.Struct("<IIQ")  # version, dimension, count
_KEYLEN = struct.Struct("<I")


def normalize_key(key: str) -> str:
    """Canonical key form: Unicode NFC plus surrounding-whitespace trim."""
    return unicodedata.normalize("NFC", key).strip()


@dataclass(frozen=True)
class TextQuery:
    """A phrase lookup, optionally under the photo-prompt key prefix."""

    phrase: str
    use_photo_prompt: bool = False

    def resolved_key(self) -> str:
        phrase = normalize_key(self.phrase)
        if not phrase:
            raise EmptyInput("text query phrase is empty")
        return PHOTO_PROMPT + phrase if self.use_photo_prompt else phrase


class EmbeddingStore:
    """Immutable mapping from text keys to fixed-dimension float64 vectors.

    Safe for concurrent readers once constructed; all mutation paths are
    confined to the constructor.
    """

    def __init__(self, dimension, entries, source="synthetic", created=None,
                 normalize=False):
        if dimension <= 0:
            raise DimensionMismatch(f"dimension must be positive, got {dimension}")
        self._dimension = int(dimension)
        self._entries: dict[str, np.ndarray] = {}
        self.source = source
        self.created = time.time() if created is None else created
        for raw_key, values in entries.items():
            key = normalize_key(raw_key)
            if key in self._entries:
                raise DuplicateKey(f"duplicate key {key!r}")
            vec = np.asarray(values, dtype=np.float64)
            if vec.ndim != 1 or vec.shape[0] != self._dimension:
                raise DimensionMismatch(
                    f"key {key!r}: expected length {self._dimension}, got {vec.shape}"
                )
            if not np.all(np.isfinite(vec)):
                raise ValueError(f"key {key!r}: non-finite entries")
            if normalize:
                norm = float(np.linalg.norm(vec))
                if norm > 0.0:
                    vec = vec / norm
            vec.setflags(write=False)
            self._entries[key] = vec

    @property
    def dimension(self) -> int:
        return self._dimension

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key: str) -> bool:
        return normalize_key(key) in self._entries

    def keys(self):
        return self._entries.keys()

    def get(self, key: str) -> np.ndarray:
        resolved = normalize_key(key)
        try:
            return self._entries[resolved]
        except KeyError:
            raise KeyNotFound(resolved) from None


def save_store(store: EmbeddingStore, path) -> None:
    """Write the store in the binary format above (float32 records)."""
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_HEADER.pack(FORMAT_VERSION, store.dimension, len(store)))
        for key in store.keys():
            data = key.encode("utf-8")
            fh.write(_KEYLEN.pack(len(data)))
            fh.write(data)
            fh.write(store.get(key).astype("<f4").tobytes())


def load_store(path, normalize=False) -> EmbeddingStore:
    """Load a store file, validating magic, dimension, and key uniqueness."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(MAGIC) + _HEADER.size:
        raise MalformedHeader("file shorter than header")
    if blob[: len(MAGIC)] != MAGIC:
        raise MalformedHeader(f"bad magic {blob[:len(MAGIC)]!r}")
    version, dimension, count = _HEADER.unpack_from(blob, len(MAGIC))
    if version != FORMAT_VERSION:
        raise MalformedHeader(f"unsupported version {version}")
    if dimension == 0:
        raise MalformedHeader("dimension 0 in header")
    offset = len(MAGIC) + _HEADER.size
    vec_bytes = 4 * dimension
    entries: dict[str, np.ndarray] = {}
    for _ in range(count):
        if offset + _KEYLEN.size > len(blob):
            raise MalformedHeader("truncated record header")
        (key_len,) = _KEYLEN.unpack_from(blob, offset)
        offset += _KEYLEN.size
        if offset + key_len > len(blob):
            raise MalformedHeader("truncated key")
        key = blob[offset : offset + key_len].decode("utf-8")
        offset += key_len
        if offset + vec_bytes > len(blob):
            raise DimensionMismatch(
                f"record {key!r}: vector bytes inconsistent with dimension {dimension}"
            )
        vec = np.frombuffer(blob, dtype="<f4", count=dimension, offset=offset)
        offset += vec_bytes
        key = normalize_key(key)
        if key in entries:
            raise DuplicateKey(f"duplicate key {key!r}")
        entries[key] = vec
    if offset != len(blob):
        raise MalformedHeader(f"{len(blob) - offset} trailing bytes after records")
    return EmbeddingStore(dimension, entries, source="exported", normalize=normalize)


def text_feature(store: EmbeddingStore, query: TextQuery) -> np.ndarray:
    """Look up a phrase vector; pure read, raises KeyNotFound with the resolved key."""
    return store.get(query.resolved_key())


def mean_pool(features) -> np.ndarray:
    """Componentwise arithmetic mean of one or more equal-length vectors."""
    if len(features) == 0:
        raise EmptyInput("mean_pool needs at least one vector")
    first = np.asarray(features[0], dtype=np.float64)
    total = first.copy()
    for vec in features[1:]:
        arr = np.asarray(vec, dtype=np.float64)
        if arr.shape != first.shape:
            raise MixedDimensions(f"{arr.shape} vs {first.shape}")
        total += arr
    return total / len(features)


def dot(a, b) -> float:
    """Plain inner product; commutative bit-for-bit."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise MixedDimensions(f"{a.shape} vs {b.shape}")
    return float(np.dot(a, b))
