"""Named-tensor checkpoint container.

Layout (little endian): magic (8 bytes) | version u32 | dim u32 |
section count u32 | sections, each [name_len u32 | name utf-8 |
ndim u32 | shape u64 * ndim | float64 data].
"""
from __future__ import annotations

import struct

import numpy as np

from .errors import MalformedHeader

VERSION = 1
_HEAD = struct.Struct("<III")  # version, dim, n_sections
_U32 = struct.Struct("<I")
_U64 = struct.Struct("<Q")


def write_checkpoint(path, magic: bytes, dim: int, sections) -> None:
    if len(magic) != 8:
        raise ValueError("magic must be 8 bytes")
    with open(path, "wb") as fh:
        fh.write(magic)
        fh.write(_HEAD.pack(VERSION, dim, len(sections)))
        for name, array in sections.items():
            arr = np.ascontiguousarray(array, dtype="<f8")
            data = name.encode("utf-8")
            fh.write(_U32.pack(len(data)))
            fh.write(data)
            fh.write(_U32.pack(arr.ndim))
            for extent in arr.shape:
                fh.write(_U64.pack(extent))
            fh.write(arr.tobytes())


def read_checkpoint(path, magic: bytes):
    """Returns (dim, {name: float64 array}). Raises MalformedHeader on corruption."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 8 + _HEAD.size or blob[:8] != magic:
        raise MalformedHeader(f"expected magic {magic!r}")
    version, dim, n_sections = _HEAD.unpack_from(blob, 8)
    if version != VERSION:
        raise MalformedHeader(f"unsupported checkpoint version {version}")
    offset = 8 + _HEAD.size
    sections = {}
    for _ in range(n_sections):
        (name_len,) = _U32.unpack_from(blob, offset)
        offset += _U32.size
        name = blob[offset : offset + name_len].decode("utf-8")
        offset += name_len
        (ndim,) = _U32.unpack_from(blob, offset)
        offset += _U32.size
        shape = []
        for _ in range(ndim):
            (extent,) = _U64.unpack_from(blob, offset)
            offset += _U64.size
            shape.append(extent)
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(blob, dtype="<f8", count=count, offset=offset)
        offset += count * 8
        sections[name] = arr.reshape(shape).astype(np.float64)
    if offset != len(blob):
        raise MalformedHeader("trailing bytes in checkpoint")
    return dim, sections
