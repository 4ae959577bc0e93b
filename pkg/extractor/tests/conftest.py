import numpy as np
import pytest
from PIL import Image

from nftembed.model import PenultimateEmbedder


@pytest.fixture(scope="session")
def embedder():
    # seeded random-init backbone: deterministic and offline
    return PenultimateEmbedder(weights=None, seed=0)


FRAME_COLORS = [(255, 0, 0), (0, 255, 0), (0, 0, 255), (255, 255, 0), (255, 255, 255)]


def solid_image(color, size=(64, 64)) -> Image.Image:
    return Image.new("RGB", size, color)


@pytest.fixture()
def five_frame_gif(tmp_path):
    frames = [solid_image(c) for c in FRAME_COLORS]
    path = tmp_path / "anim.gif"
    frames[0].save(path, save_all=True, append_images=frames[1:], duration=100, loop=0)
    return path


@pytest.fixture()
def png_of(tmp_path):
    def make(color, name="img.png"):
        path = tmp_path / name
        solid_image(color).save(path)
        return path

    return make


def write_manifest(path, rows):
    lines = ["id,path"] + [f"{i},{p}" for i, p in rows]
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture()
def manifest_writer():
    return write_manifest


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
