"""Binary container for id-keyed embedding vectors.

Layout (little-endian): 4-byte magic, u32 vector dimension, u64 record
count, then per record a u16 id length, the UTF-8 id bytes, and
``dimension`` float32 components. The same container stores fitted PCA
models under a different magic.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

EMB_MAGIC = b"EMB1"
PCA_MAGIC = b"PCA1"
DEFAULT_DIM = 4096

_HEADER = struct.Struct("<4sIQ")
_ID_LEN = struct.Struct("<H")


@dataclass
class EmbeddingMatrix:
    """Dense embedding matrix with stable id ordering."""

    ids: list[str]
    vectors: np.ndarray  # (n, dim) float32

    def __post_init__(self):
        self.index = {id_: i for i, id_ in enumerate(self.ids)}
        if len(self.ids) != len(self.vectors):
            raise ValueError("ids and vectors disagree in length")

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, id_: str) -> bool:
        return id_ in self.index

    def get(self, id_: str) -> np.ndarray:
        return self.vectors[self.index[id_]]


def write_embeddings(path: str | Path, emb: EmbeddingMatrix, magic: bytes = EMB_MAGIC) -> None:
    vectors = np.ascontiguousarray(emb.vectors, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(magic, emb.dim, len(emb.ids)))
        for id_, vec in zip(emb.ids, vectors):
            raw = id_.encode("utf-8")
            if len(raw) > 0xFFFF:
                raise ValueError(f"id too long: {id_[:32]!r}...")
            fh.write(_ID_LEN.pack(len(raw)))
            fh.write(raw)
            fh.write(vec.tobytes())


def read_embeddings(path: str | Path, magic: bytes = EMB_MAGIC) -> EmbeddingMatrix:
    """Read a container; non-finite vectors error, negatives only log."""
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise ValueError("truncated container header")
        got_magic, dim, count = _HEADER.unpack(header)
        if got_magic != magic:
            raise ValueError(f"bad magic {got_magic!r}, want {magic!r}")
        ids: list[str] = []
        vectors = np.empty((count, dim), dtype=np.float32)
        vec_bytes = dim * 4
        for i in range(count):
            (id_len,) = _ID_LEN.unpack(fh.read(_ID_LEN.size))
            ids.append(fh.read(id_len).decode("utf-8"))
            buf = fh.read(vec_bytes)
            if len(buf) != vec_bytes:
                raise ValueError(f"truncated vector for record {i}")
            vectors[i] = np.frombuffer(buf, dtype="<f4")
    if not np.all(np.isfinite(vectors)):
        raise ValueError("container holds non-finite components")
    if vectors.size and vectors.min() < 0:
        logger.warning("embedding container %s holds negative components", path)
    return EmbeddingMatrix(ids=ids, vectors=vectors)
