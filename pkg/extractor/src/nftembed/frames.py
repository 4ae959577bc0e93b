"""Image decoding: central GIF frame selection, optional SVG
rasterization, and conversion to RGB."""

from __future__ import annotations

import io
from pathlib import Path

from PIL import Image

try:
    import cairosvg
except ImportError:  # SVG support is an optional extra
    cairosvg = None

SVG_RASTER_SIZE = 224


class DecodeError(Exception):
    """File cannot be turned into an RGB image."""


def central_frame_index(n_frames: int) -> int:
    return n_frames // 2


def load_rgb(path: str | Path, format: str) -> Image.Image:
    """Decode one object into an RGB image.

    GIFs use their central frame; SVGs rasterize at 224x224 on a white
    background (requires the cairosvg extra); anything undecodable
    raises DecodeError.
    """
    path = Path(path)
    try:
        if format == "SVG":
            if cairosvg is None:
                raise DecodeError(f"{path}: SVG support needs the cairosvg extra")
            png_bytes = cairosvg.svg2png(
                url=str(path),
                output_width=SVG_RASTER_SIZE,
                output_height=SVG_RASTER_SIZE,
                background_color="white",
            )
            return Image.open(io.BytesIO(png_bytes)).convert("RGB")
        img = Image.open(path)
        if format == "GIF":
            n_frames = getattr(img, "n_frames", 1)
            img.seek(central_frame_index(n_frames))
        return img.convert("RGB")
    except DecodeError:
        raise
    except Exception as err:
        raise DecodeError(f"{path}: {err}") from err
