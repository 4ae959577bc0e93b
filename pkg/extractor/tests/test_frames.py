import numpy as np
import pytest
from PIL import Image

from nftembed.frames import DecodeError, central_frame_index, load_rgb
from nftembed.manifest import ObjectManifest

from conftest import FRAME_COLORS, solid_image


class TestCentralFrame:
    @pytest.mark.parametrize("n,expected", [(1, 0), (2, 1), (5, 2), (6, 3)])
    def test_index(self, n, expected):
        assert central_frame_index(n) == expected

    def test_five_frame_gif_decodes_frame_two(self, five_frame_gif):
        img = load_rgb(five_frame_gif, "GIF")
        expected = np.array(solid_image(FRAME_COLORS[2]))
        np.testing.assert_array_equal(np.array(img), expected)

    def test_static_image_passthrough(self, png_of):
        path = png_of((10, 20, 30))
        img = load_rgb(path, "PNG")
        assert img.size == (64, 64)
        np.testing.assert_array_equal(np.array(img)[0, 0], [10, 20, 30])


class TestDecodeErrors:
    def test_garbage_file(self, tmp_path):
        path = tmp_path / "broken.png"
        path.write_bytes(b"not an image at all")
        with pytest.raises(DecodeError):
            load_rgb(path, "PNG")

    def test_missing_file(self, tmp_path):
        with pytest.raises(DecodeError):
            load_rgb(tmp_path / "absent.jpg", "JPEG")

    def test_svg_without_rasterizer_raises_decode_error(self, tmp_path):
        import nftembed.frames as frames

        if frames.cairosvg is not None:
            pytest.skip("cairosvg installed; SVG path active")
        path = tmp_path / "shape.svg"
        path.write_text('<svg xmlns="http://www.w3.org/2000/svg" width="4" height="4"/>')
        with pytest.raises(DecodeError, match="cairosvg"):
            load_rgb(path, "SVG")


class TestManifest:
    def test_partitions_supported_and_unsupported(self, tmp_path, manifest_writer):
        manifest_path = manifest_writer(
            tmp_path / "m.csv",
            [("a", "x.png"), ("b", "y.GIF"), ("c", "z.mp4"), ("d", "w.jpeg")],
        )
        manifest = ObjectManifest.from_csv(manifest_path)
        assert [e.object_id for e in manifest.entries] == ["a", "b", "d"]
        assert manifest.entries[1].format == "GIF"
        assert manifest.unsupported == [("c", ".mp4")]

    def test_duplicate_id_rejected(self, tmp_path, manifest_writer):
        manifest_path = manifest_writer(tmp_path / "m.csv", [("a", "x.png"), ("a", "y.png")])
        with pytest.raises(ValueError, match="duplicate"):
            ObjectManifest.from_csv(manifest_path)

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("object,file\na,x.png\n")
        with pytest.raises(ValueError, match="id,path"):
            ObjectManifest.from_csv(path)
