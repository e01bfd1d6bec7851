import io
import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from PIL import Image

from thzqa.image import (
    CUBE_MAGIC, GrayImage, ImageCube, ImageFormatError, load_cube, load_image,
    max_intensity_projection, save_cube, save_image,
)


def cube_bytes(w, h, d, samples):
    return CUBE_MAGIC + struct.pack("<III", w, h, d) + np.asarray(samples, "<f4").tobytes()


unit_arrays = arrays(np.float64, st.tuples(st.integers(1, 12), st.integers(1, 12)),
                     elements=st.floats(0, 1, allow_nan=False))


class TestGrayImage:
    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            GrayImage(np.array([[0.0, 1.5]]))
        with pytest.raises(ValueError):
            GrayImage(np.array([[np.nan]]))

    def test_samples_are_row_major(self):
        img = GrayImage.from_samples(3, 2, [0, 0.1, 0.2, 0.3, 0.4, 0.5])
        assert (img.width, img.height) == (3, 2)
        assert img.pixels[1, 0] == 0.3
        np.testing.assert_array_equal(img.samples, [0, 0.1, 0.2, 0.3, 0.4, 0.5])

    def test_pixels_read_only(self):
        img = GrayImage(np.zeros((2, 2)))
        with pytest.raises(ValueError):
            img.pixels[0, 0] = 1.0

    def test_sample_count_mismatch(self):
        with pytest.raises(ValueError):
            GrayImage.from_samples(2, 2, [0.0, 0.0, 0.0])


class TestPgm:
    def test_p2_normalizes_by_maxval(self):
        img = load_image(b"P2\n2 2\n255\n0 255\n255 0\n")
        np.testing.assert_array_equal(img.pixels, [[0, 1], [1, 0]])

    def test_p2_comments(self):
        img = load_image(b"P2\n# made by hand\n2 1\n# max\n4\n1 2\n")
        np.testing.assert_array_equal(img.pixels, [[0.25, 0.5]])

    def test_p5_16bit_big_endian(self):
        payload = np.full(6, 32768, ">u2").tobytes()
        img = load_image(b"P5\n3 2\n65535\n" + payload)
        assert img.pixels == pytest.approx(np.full((2, 3), 32768 / 65535), abs=0)
        assert img.pixels[0, 0] == pytest.approx(0.50001, abs=1e-5)

    def test_truncated(self):
        with pytest.raises(ImageFormatError, match="truncated payload"):
            load_image(b"P5\n4 4\n255\n" + bytes(15))
        with pytest.raises(ImageFormatError, match="truncated payload"):
            load_image(b"P2\n2 2\n255\n0 1 2\n")

    @pytest.mark.parametrize("data", [b"P5\n", b"P5\n0 3\n255\n", b"P5\n2 2\n70000\n" + bytes(8),
                                      b"P7\n1 1\n255\n\x00", b"P2\nx 1\n255\n0\n"])
    def test_malformed_header(self, data):
        with pytest.raises(ImageFormatError, match="malformed header"):
            load_image(data)

    def test_value_above_maxval(self):
        with pytest.raises(ImageFormatError):
            load_image(b"P2\n1 1\n10\n11\n")

    def test_constant_payloads(self):
        zero = save_image(GrayImage(np.zeros((3, 4))), "pgm", 255)
        assert zero == b"P5\n4 3\n255\n" + bytes(12)
        one = save_image(GrayImage(np.ones((3, 4))), "pgm", 65535)
        assert one.endswith(b"\xff" * 24)

    def test_roundtrip_bound_8bit(self):
        rng = np.random.default_rng(0)
        img = GrayImage(rng.random((380, 127)))
        back = load_image(save_image(img, "pgm", 255))
        assert np.abs(back.pixels - img.pixels).max() <= 1 / 510 + 1e-15

    @given(unit_arrays, st.sampled_from([1, 7, 255, 1000, 65535]))
    @settings(max_examples=60, deadline=None)
    def test_roundtrip_within_one_step(self, px, maxval):
        back = load_image(save_image(GrayImage(px), "pgm", maxval))
        assert np.abs(back.pixels - px).max() <= 1 / maxval + 1e-12


class TestPng:
    def png(self, array, mode=None):
        buf = io.BytesIO()
        Image.fromarray(array, mode=mode).save(buf, format="PNG")
        return buf.getvalue()

    def test_rgb_rejected(self):
        with pytest.raises(ImageFormatError, match="multichannel input"):
            load_image(self.png(np.zeros((4, 4, 3), np.uint8)))

    def test_8bit(self):
        img = load_image(self.png(np.array([[0, 51], [255, 102]], np.uint8)))
        np.testing.assert_allclose(img.pixels, [[0, 0.2], [1, 0.4]])

    @pytest.mark.parametrize("maxval", [255, 65535])
    def test_roundtrip(self, maxval):
        rng = np.random.default_rng(1)
        img = GrayImage(rng.random((20, 13)))
        back = load_image(save_image(img, "png", maxval))
        assert np.abs(back.pixels - img.pixels).max() <= 0.5 / maxval + 1e-12

    def test_format_sniffing_vs_hint(self):
        data = save_image(GrayImage(np.zeros((2, 2))), "png")
        assert load_image(data).width == 2
        with pytest.raises(ImageFormatError):
            load_image(data, "pgm")


class TestCube:
    def test_single_sample(self):
        cube = load_cube(cube_bytes(1, 1, 1, [0.5]))
        assert cube.voxels.shape == (1, 1, 1)
        assert cube.voxels[0, 0, 0] == 0.5

    def test_truncated(self):
        with pytest.raises(ImageFormatError, match="truncated payload"):
            load_cube(cube_bytes(2, 2, 3, np.zeros(11)))

    def test_out_of_range(self):
        with pytest.raises(ImageFormatError, match="sample out of range"):
            load_cube(cube_bytes(1, 1, 1, [1.5]))
        with pytest.raises(ImageFormatError, match="sample out of range"):
            load_cube(cube_bytes(1, 1, 1, [np.nan]))

    def test_bad_magic_and_dims(self):
        with pytest.raises(ImageFormatError, match="bad magic"):
            load_cube(b"THZCUBE2" + bytes(16))
        with pytest.raises(ImageFormatError, match="dim overflow"):
            load_cube(cube_bytes(0, 1, 1, []))
        with pytest.raises(ImageFormatError, match="dim overflow"):
            load_cube(cube_bytes(2**31, 2**31, 4, []))

    def test_layout_x_fastest(self):
        # x varies fastest, then y, then z
        cube = load_cube(cube_bytes(2, 3, 2, np.arange(12) / 11))
        assert cube.voxels[1, 2, 0] == pytest.approx(np.float32(10 / 11))
        assert (cube.width, cube.height, cube.depth) == (2, 3, 2)

    def test_save_roundtrip(self):
        rng = np.random.default_rng(2)
        vox = rng.random((3, 4, 5)).astype(np.float32).astype(np.float64)
        assert np.array_equal(load_cube(save_cube(ImageCube(vox))).voxels, vox)


class TestProjection:
    def test_depth_one_is_identity(self):
        rng = np.random.default_rng(3)
        px = rng.random((5, 7))
        np.testing.assert_array_equal(max_intensity_projection(ImageCube(px[None])).pixels, px)

    def test_all_zero(self):
        assert not max_intensity_projection(ImageCube(np.zeros((4, 3, 2)))).pixels.any()

    def test_matches_exhaustive_scan(self):
        rng = np.random.default_rng(4)
        vox = rng.random((3, 2, 2))
        out = max_intensity_projection(ImageCube(vox)).pixels
        for y in range(2):
            for x in range(2):
                best = vox[0, y, x]
                for z in range(1, 3):
                    if vox[z, y, x] > best:
                        best = vox[z, y, x]
                assert out[y, x] == best

    @given(arrays(np.float64, st.tuples(st.integers(1, 4), st.integers(1, 5), st.integers(1, 5)),
                  elements=st.floats(0, 1, allow_nan=False)))
    @settings(max_examples=60, deadline=None)
    def test_idempotent(self, vox):
        once = max_intensity_projection(ImageCube(vox))
        twice = max_intensity_projection(ImageCube(once.pixels[None]))
        np.testing.assert_array_equal(once.pixels, twice.pixels)

    @given(st.data())
    @settings(max_examples=60, deadline=None)
    def test_monotone(self, data):
        vox = data.draw(arrays(np.float64, (3, 4, 4), elements=st.floats(0, 1, allow_nan=False)))
        z, y, x = (data.draw(st.integers(0, n - 1)) for n in vox.shape)
        bumped = vox.copy()
        bumped[z, y, x] = data.draw(st.floats(vox[z, y, x], 1.0))
        before = max_intensity_projection(ImageCube(vox)).pixels[y, x]
        after = max_intensity_projection(ImageCube(bumped)).pixels[y, x]
        assert after >= before
