"""Object manifest: id -> image path, with format tagging."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

SUPPORTED_FORMATS = {
    ".png": "PNG",
    ".jpg": "JPEG",
    ".jpeg": "JPEG",
    ".gif": "GIF",
    ".svg": "SVG",
}


@dataclass
class ManifestEntry:
    object_id: str
    path: Path
    format: str


@dataclass
class ObjectManifest:
    """Parsed id,path manifest; unsupported formats are kept aside."""

    entries: list[ManifestEntry] = field(default_factory=list)
    unsupported: list[tuple[str, str]] = field(default_factory=list)  # (id, suffix)

    @classmethod
    def from_csv(cls, path: str | Path) -> "ObjectManifest":
        manifest = cls()
        seen: set[str] = set()
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or [f.strip() for f in reader.fieldnames[:2]] != ["id", "path"]:
                raise ValueError(f"manifest must start with id,path columns, got {reader.fieldnames!r}")
            for row in reader:
                object_id = row["id"].strip()
                if not object_id:
                    raise ValueError("manifest row with empty id")
                if object_id in seen:
                    raise ValueError(f"duplicate manifest id {object_id!r}")
                seen.add(object_id)
                file_path = Path(row["path"])
                fmt = SUPPORTED_FORMATS.get(file_path.suffix.lower())
                if fmt is None:
                    manifest.unsupported.append((object_id, file_path.suffix.lower()))
                    continue
                manifest.entries.append(ManifestEntry(object_id, file_path, fmt))
        return manifest

    def __len__(self) -> int:
        return len(self.entries)
