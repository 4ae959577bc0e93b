"""Batch image-embedding extraction to the EMB1 container format."""

__version__ = "0.1.0"

from nftembed.manifest import ObjectManifest
from nftembed.model import PenultimateEmbedder
from nftembed.extract import extract

__all__ = ["ObjectManifest", "PenultimateEmbedder", "extract", "__version__"]
