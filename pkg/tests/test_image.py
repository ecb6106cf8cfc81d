"""Image container, PNG byte contracts, and color-space conversions."""

import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image as PILImage

from retouchkit.image import (
    HsvImage,
    Image,
    ImageIOError,
    TruncatedStreamError,
    UnsupportedBitDepthError,
    decode_png,
    encode_gray_png,
    encode_png,
    hsv_to_rgb,
    load_image,
    luminance,
    quantize_to_bytes,
    rgb_to_hsv,
    rgb_to_lab,
    save_image,
    srgb_to_linear,
)


def random_bytes_image(rng, h=9, w=7):
    return Image.from_bytes(rng.integers(0, 256, (h, w, 3), dtype=np.uint8))


class TestContainer:
    def test_from_bytes_is_exact_division(self):
        raw = np.arange(256, dtype=np.uint8).reshape(16, 16)[..., None].repeat(3, -1)
        img = Image.from_bytes(raw)
        np.testing.assert_array_equal(img.data, raw.astype(np.float64) / 255.0)

    def test_byte_round_trip_identity(self):
        rng = np.random.default_rng(0)
        raw = rng.integers(0, 256, (12, 8, 3), dtype=np.uint8)
        np.testing.assert_array_equal(Image.from_bytes(raw).to_bytes(), raw)

    def test_quantize_rounds_half_up(self):
        # 0.5/255 boundary: values at exactly k + 0.5 round to k + 1
        vals = np.array([[[0.5 / 255.0, 1.5 / 255.0, 254.5 / 255.0]]])
        np.testing.assert_array_equal(
            quantize_to_bytes(vals), np.array([[[1, 2, 255]]], dtype=np.uint8)
        )

    def test_from_array_clamps(self):
        img = Image.from_array(np.array([[[-0.5, 0.3, 1.7]]]))
        np.testing.assert_array_equal(img.data, [[[0.0, 0.3, 1.0]]])

    def test_rejects_nan(self):
        with pytest.raises(ValueError, match="finite"):
            Image.from_array(np.full((2, 2, 3), np.nan))

    def test_rejects_bad_shape(self):
        with pytest.raises(ValueError, match="H x W x 3"):
            Image(np.zeros((4, 4)))

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            Image(np.zeros((0, 3, 3)))

    def test_data_is_write_protected(self):
        img = Image.from_array(np.zeros((2, 2, 3)))
        with pytest.raises(ValueError):
            img.data[0, 0, 0] = 1.0

    def test_from_bytes_requires_uint8(self):
        with pytest.raises(ValueError, match="uint8"):
            Image.from_bytes(np.zeros((2, 2, 3), dtype=np.float64))

    def test_dimensions(self):
        img = Image.from_array(np.zeros((5, 9, 3)))
        assert (img.height, img.width) == (5, 9)


class TestPngIO:
    def test_save_load_round_trip(self, tmp_path):
        rng = np.random.default_rng(1)
        img = random_bytes_image(rng)
        path = tmp_path / "x.png"
        save_image(img, path)
        np.testing.assert_array_equal(load_image(path).data, img.data)

    def test_encode_decode_round_trip(self):
        rng = np.random.default_rng(2)
        img = random_bytes_image(rng, 5, 11)
        np.testing.assert_array_equal(decode_png(encode_png(img)).data, img.data)

    def test_rgba_alpha_dropped(self, tmp_path):
        rgba = np.zeros((4, 4, 4), dtype=np.uint8)
        rgba[..., 0] = 200
        rgba[..., 3] = 7
        path = tmp_path / "a.png"
        PILImage.fromarray(rgba, mode="RGBA").save(path)
        img = load_image(path)
        assert img.data.shape == (4, 4, 3)
        assert img.data[0, 0, 0] == pytest.approx(200 / 255.0)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_image(tmp_path / "nope.png")

    def test_sixteen_bit_rejected(self, tmp_path):
        arr = (np.ones((4, 4)) * 60000).astype(np.uint16)
        path = tmp_path / "deep.png"
        pil = PILImage.new("I;16", (4, 4))
        pil.putdata([int(v) for v in arr.ravel()])
        pil.save(path)
        with pytest.raises(UnsupportedBitDepthError, match="bit depth"):
            load_image(path)

    def test_palette_png_rejected(self, tmp_path):
        pil = PILImage.fromarray(
            np.zeros((4, 4, 3), dtype=np.uint8), mode="RGB"
        ).convert("P")
        path = tmp_path / "pal.png"
        pil.save(path)
        with pytest.raises(UnsupportedBitDepthError, match="color type"):
            load_image(path)

    def test_grayscale_png_rejected(self, tmp_path):
        path = tmp_path / "gray.png"
        PILImage.fromarray(np.zeros((4, 4), dtype=np.uint8), mode="L").save(path)
        with pytest.raises(UnsupportedBitDepthError):
            load_image(path)

    def test_truncated_stream(self, tmp_path):
        img = Image.from_array(np.random.default_rng(3).random((16, 16, 3)))
        data = encode_png(img)
        with pytest.raises(TruncatedStreamError):
            decode_png(data[: len(data) // 2])

    def test_not_a_png(self):
        with pytest.raises(TruncatedStreamError, match="not a complete PNG"):
            decode_png(b"JFIF definitely not a png stream")

    def test_truncated_file_on_disk(self, tmp_path):
        img = Image.from_array(np.random.default_rng(4).random((16, 16, 3)))
        path = tmp_path / "cut.png"
        save_image(img, path)
        raw = path.read_bytes()
        path.write_bytes(raw[: len(raw) - 30])
        with pytest.raises(TruncatedStreamError):
            load_image(path)

    def test_errors_share_base_class(self):
        assert issubclass(UnsupportedBitDepthError, ImageIOError)
        assert issubclass(TruncatedStreamError, ImageIOError)

    def test_encode_gray_round_trip(self):
        rng = np.random.default_rng(5)
        plane = rng.integers(0, 256, (6, 9), dtype=np.uint8)
        data = encode_gray_png(plane)
        with PILImage.open(io.BytesIO(data)) as pil:
            assert pil.mode == "L"
            np.testing.assert_array_equal(np.asarray(pil), plane)

    def test_encode_gray_rejects_rgb(self):
        with pytest.raises(ValueError, match="uint8 plane"):
            encode_gray_png(np.zeros((4, 4, 3), dtype=np.uint8))


class TestColorSpaces:
    def test_hsv_known_values(self):
        # red, green, blue, white, black, gray
        rgb = np.array([
            [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
            [[1, 1, 1], [0, 0, 0], [0.5, 0.5, 0.5]],
        ], dtype=float)
        hsv = rgb_to_hsv(Image(rgb)).data
        np.testing.assert_allclose(hsv[0, 0], [0.0, 1.0, 1.0], atol=1e-12)
        np.testing.assert_allclose(hsv[0, 1], [1 / 3, 1.0, 1.0], atol=1e-12)
        np.testing.assert_allclose(hsv[0, 2], [2 / 3, 1.0, 1.0], atol=1e-12)
        np.testing.assert_allclose(hsv[1, 0], [0.0, 0.0, 1.0], atol=1e-12)
        np.testing.assert_allclose(hsv[1, 1], [0.0, 0.0, 0.0], atol=1e-12)
        np.testing.assert_allclose(hsv[1, 2], [0.0, 0.0, 0.5], atol=1e-12)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=40, deadline=None)
    def test_hsv_round_trip(self, seed):
        rng = np.random.default_rng(seed)
        img = Image(rng.random((4, 5, 3)))
        back = hsv_to_rgb(rgb_to_hsv(img))
        np.testing.assert_allclose(back.data, img.data, atol=1e-12)

    def test_hsv_matches_colorsys(self):
        import colorsys

        rng = np.random.default_rng(6)
        img = Image(rng.random((3, 4, 3)))
        hsv = rgb_to_hsv(img).data
        for i in range(3):
            for j in range(4):
                expected = colorsys.rgb_to_hsv(*img.data[i, j])
                np.testing.assert_allclose(hsv[i, j], expected, atol=1e-12)

    def test_srgb_linear_piecewise_continuity(self):
        lo = srgb_to_linear(np.array(0.04045 - 1e-12))
        hi = srgb_to_linear(np.array(0.04045 + 1e-12))
        assert abs(lo - hi) < 1e-7

    def test_lab_white_and_black(self):
        lab = rgb_to_lab(Image(np.array([[[1.0, 1.0, 1.0], [0.0, 0.0, 0.0]]]))).data
        np.testing.assert_allclose(lab[0, 0], [100.0, 0.0, 0.0], atol=1e-8)
        np.testing.assert_allclose(lab[0, 1], [0.0, 0.0, 0.0], atol=1e-8)

    def test_lab_gray_axis_neutral(self):
        grays = np.linspace(0, 1, 9).reshape(3, 3, 1).repeat(3, -1)
        lab = rgb_to_lab(Image(grays)).data
        np.testing.assert_allclose(lab[..., 1], 0.0, atol=1e-8)
        np.testing.assert_allclose(lab[..., 2], 0.0, atol=1e-8)
        flat = lab[..., 0].ravel()
        assert np.all(np.diff(flat) > 0)

    def test_lab_red_reference(self):
        # sRGB (1,0,0), D65, normalized so white has Y=sum of matrix row:
        # classic textbook value L*=53.24, a*=80.09, b*=67.20
        lab = rgb_to_lab(Image(np.array([[[1.0, 0.0, 0.0]]]))).data[0, 0]
        np.testing.assert_allclose(lab, [53.2408, 80.0925, 67.2032], atol=2e-3)

    def test_luminance_weights(self):
        img = Image(np.array([[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]]))
        np.testing.assert_allclose(luminance(img)[0], [0.299, 0.587, 0.114])
