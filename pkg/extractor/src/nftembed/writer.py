"""EMB1 container writer (wire format shared with the analytics toolkit).

Layout (little-endian): magic "EMB1", u32 vector dimension, u64 record
count, then per record a u16 id length, UTF-8 id bytes, and
``dimension`` float32 components.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

EMB_MAGIC = b"EMB1"
_HEADER = struct.Struct("<4sIQ")
_ID_LEN = struct.Struct("<H")


def write_emb1(path: str | Path, ids: list[str], vectors: np.ndarray) -> None:
    if len(ids) != len(vectors):
        raise ValueError("ids and vectors disagree in length")
    vectors = np.ascontiguousarray(vectors, dtype="<f4")
    dim = vectors.shape[1] if vectors.ndim == 2 else 0
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(EMB_MAGIC, dim, len(ids)))
        for object_id, vec in zip(ids, vectors):
            raw = object_id.encode("utf-8")
            if len(raw) > 0xFFFF:
                raise ValueError(f"id too long: {object_id[:32]!r}...")
            fh.write(_ID_LEN.pack(len(raw)))
            fh.write(raw)
            fh.write(vec.tobytes())
