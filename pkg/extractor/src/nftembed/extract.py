"""Batch extraction: manifest in, EMB1 + skip list out."""

from __future__ import annotations

import csv
import hashlib
import logging
from pathlib import Path

import numpy as np

from nftembed.frames import DecodeError, load_rgb
from nftembed.manifest import ObjectManifest
from nftembed.model import PenultimateEmbedder
from nftembed.writer import write_emb1

logger = logging.getLogger("nftembed")


def _file_sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def extract(
    manifest: ObjectManifest,
    embedder: PenultimateEmbedder,
    out_path: str | Path,
    skip_path: str | Path | None = None,
    batch_size: int = 16,
) -> dict:
    """Embed every manifest object and write the EMB1 container.

    Byte-identical files are embedded once and share one vector, so
    duplicates are exactly equal. Undecodable files and unsupported
    formats land on the skip list; the run continues.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be positive")
    skipped: list[tuple[str, str]] = [(oid, f"unsupported_format:{suffix}") for oid, suffix in manifest.unsupported]

    digest_of: dict[str, str] = {}
    images: dict[str, object] = {}
    for entry in manifest.entries:
        try:
            digest = _file_sha256(entry.path)
            if digest not in images:
                images[digest] = load_rgb(entry.path, entry.format)
            digest_of[entry.object_id] = digest
        except (OSError, DecodeError) as err:
            logger.warning("skipping %s: %s", entry.object_id, err)
            skipped.append((entry.object_id, f"decode_error:{err}"))

    digests = list(images)
    vectors_by_digest: dict[str, np.ndarray] = {}
    for start in range(0, len(digests), batch_size):
        chunk = digests[start : start + batch_size]
        batch_vectors = embedder.embed_batch([images[d] for d in chunk])
        for digest, vec in zip(chunk, batch_vectors):
            vectors_by_digest[digest] = vec

    ids = [e.object_id for e in manifest.entries if e.object_id in digest_of]
    vectors = (
        np.stack([vectors_by_digest[digest_of[oid]] for oid in ids])
        if ids
        else np.empty((0, 4096), dtype=np.float32)
    )
    write_emb1(out_path, ids, vectors)
    if skip_path is not None:
        with open(skip_path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id", "reason"])
            for object_id, reason in skipped:
                writer.writerow([object_id, reason])
    logger.info("embedded %d objects (%d unique images), skipped %d", len(ids), len(digests), len(skipped))
    return {"embedded": len(ids), "unique_images": len(digests), "skipped": len(skipped)}
