"""Tone-curve engine tests.

The upsampling oracle below is an independent scalar implementation of
cubic convolution with linearly extrapolated virtual endpoints; its
outputs for two fixed control vectors were frozen before the library
code was run against them.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from retouchkit.curves import (
    apply_curve,
    bicubic_matrix,
    bicubic_upsample,
    fuse,
    identity_curve,
    quantize_weight_maps,
    softmax_normalize,
    unique_color_count,
)
from retouchkit.image import Image


# -- independent oracle -------------------------------------------------

def oracle_keys(s, a=-0.5):
    s = abs(s)
    if s <= 1.0:
        return (a + 2.0) * s**3 - (a + 3.0) * s**2 + 1.0
    if s < 2.0:
        return a * s**3 - 5.0 * a * s**2 + 8.0 * a * s - 4.0 * a
    return 0.0


def oracle_upsample(points, length):
    pts = list(points)
    count = len(pts)

    def p(i):
        if i < 0:
            return pts[0] + (-i) * (pts[0] - pts[1])
        if i > count - 1:
            return pts[count - 1] + (i - (count - 1)) * (pts[count - 1] - pts[count - 2])
        return pts[i]

    out = []
    for l in range(length):
        t = l * (count - 1) / (length - 1)
        base = math.floor(t)
        frac = t - base
        out.append(sum(p(base + s) * oracle_keys(frac - s) for s in (-1, 0, 1, 2)))
    return np.array(out)


FROZEN_POINTS = [0.0, 0.32, 0.18, 0.75, 1.0, 0.6]
FROZEN_EXPECTED = np.array([
    0.0, 0.18875, 0.32, 0.234375, 0.18, 0.440625, 0.75,
    0.935625, 1.0, 0.840625, 0.6,
])
FROZEN_POINTS_2 = [0.5, 0.5, 0.5, 0.1, 0.9, 0.5, 0.5]
FROZEN_EXPECTED_2 = np.array([
    0.5, 0.5, 0.525, 0.4, 0.1, 0.75625, 0.75, 0.471875, 0.5,
])


class TestBicubicUpsample:
    def test_frozen_case(self):
        got = bicubic_upsample(np.array(FROZEN_POINTS), 11)
        np.testing.assert_allclose(got, FROZEN_EXPECTED, atol=1e-12)

    def test_frozen_case_plateau(self):
        got = bicubic_upsample(np.array(FROZEN_POINTS_2), 9)
        np.testing.assert_allclose(got, FROZEN_EXPECTED_2, atol=1e-12)

    def test_matches_oracle_on_random_curves(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            pts = rng.uniform(-1.0, 2.0, size=rng.integers(4, 16))
            length = int(rng.integers(2, 64))
            got = bicubic_upsample(pts, length)
            np.testing.assert_allclose(got, oracle_upsample(pts, length), atol=1e-10)

    def test_linear_ramp_reproduced_exactly(self):
        # the identity-at-start model depends on this holding to 1e-6
        ramp = np.linspace(0.0, 1.0, 64)
        up = bicubic_upsample(ramp, 256)
        assert np.abs(up - np.linspace(0.0, 1.0, 256)).max() < 1e-12

    def test_any_affine_sequence_reproduced(self):
        for lo, hi in [(-0.3, 1.7), (2.0, -1.0), (0.25, 0.25)]:
            seq = np.linspace(lo, hi, 10)
            up = bicubic_upsample(seq, 41)
            np.testing.assert_allclose(up, np.linspace(lo, hi, 41), atol=1e-12)

    def test_endpoints_interpolate(self):
        rng = np.random.default_rng(11)
        pts = rng.uniform(0, 1, 16)
        up = bicubic_upsample(pts, 100)
        assert up[0] == pytest.approx(pts[0], abs=1e-12)
        assert up[-1] == pytest.approx(pts[-1], abs=1e-12)

    def test_rows_sum_to_one(self):
        mat = bicubic_matrix(64, 256)
        np.testing.assert_allclose(mat.sum(axis=1), 1.0, atol=1e-12)

    def test_batched_shapes(self):
        pts = np.random.default_rng(0).uniform(0, 1, (2, 3, 8))
        up = bicubic_upsample(pts, 32)
        assert up.shape == (2, 3, 32)
        np.testing.assert_allclose(up[1, 2], bicubic_upsample(pts[1, 2], 32))

    def test_rejects_too_few_points(self):
        with pytest.raises(ValueError):
            bicubic_matrix(3, 10)

    def test_matrix_is_write_protected(self):
        mat = bicubic_matrix(8, 16)
        with pytest.raises(ValueError):
            mat[0, 0] = 5.0


class TestApplyCurve:
    def test_identity_curve_is_noop_on_quantized_pixels(self):
        rng = np.random.default_rng(3)
        img = Image.from_bytes(rng.integers(0, 256, (9, 7, 3), dtype=np.uint8))
        ident = np.tile(identity_curve(256), (3, 1))
        np.testing.assert_allclose(apply_curve(img, ident), img.data, atol=1e-15)

    def test_scalar_oracle_agreement(self):
        rng = np.random.default_rng(4)
        pixels = rng.uniform(0, 1, (5, 6, 3))
        curve_set = rng.uniform(-0.2, 1.2, (3, 17))
        got = apply_curve(pixels, curve_set)
        for i in range(5):
            for j in range(6):
                for c in range(3):
                    pos = pixels[i, j, c] * 16
                    k = min(int(math.floor(pos)), 15)
                    f = pos - k
                    want = curve_set[c, k] * (1 - f) + curve_set[c, k + 1] * f
                    assert got[i, j, c] == pytest.approx(want, abs=1e-12)

    def test_exact_byte_levels_hit_entries(self):
        # with L=256, pixel k/255 must read entry k exactly
        curve = np.random.default_rng(9).uniform(0, 1, (3, 256))
        img = np.full((1, 1, 3), 200 / 255.0)
        np.testing.assert_allclose(apply_curve(img, curve)[0, 0], curve[:, 200], atol=1e-12)

    def test_out_of_range_pixels_clipped_before_lookup(self):
        curve = np.tile(identity_curve(256), (3, 1))
        img = np.array([[[-0.5, 1.5, 0.5]]])
        np.testing.assert_allclose(apply_curve(img, curve)[0, 0], [0.0, 1.0, 0.5])

    def test_output_not_clamped(self):
        curve = np.full((3, 256), 1.7)
        out = apply_curve(np.full((2, 2, 3), 0.5), curve)
        assert np.all(out == 1.7)

    def test_rejects_bad_curve_shape(self):
        with pytest.raises(ValueError):
            apply_curve(np.zeros((2, 2, 3)), np.zeros((4, 256)))


class TestFuse:
    def test_scalar_oracle(self):
        rng = np.random.default_rng(6)
        cands = rng.uniform(0, 1, (4, 3, 5, 3))
        weights = rng.uniform(0, 1, (4, 3, 5))
        weights /= weights.sum(axis=0)
        got = fuse(cands, weights)
        for i in range(3):
            for j in range(5):
                want = sum(weights[n, i, j] * cands[n, i, j] for n in range(4))
                np.testing.assert_allclose(got[i, j], want, atol=1e-12)

    def test_uniform_weights_average(self):
        cands = np.stack([np.zeros((2, 2, 3)), np.ones((2, 2, 3))])
        weights = np.full((2, 2, 2), 0.5)
        np.testing.assert_allclose(fuse(cands, weights), 0.5)

    def test_one_hot_weights_select(self):
        rng = np.random.default_rng(8)
        cands = rng.uniform(0, 1, (3, 4, 4, 3))
        weights = np.zeros((3, 4, 4))
        weights[1] = 1.0
        np.testing.assert_allclose(fuse(cands, weights), cands[1])

    def test_shape_mismatch_raises(self):
        with pytest.raises(ValueError):
            fuse(np.zeros((2, 4, 4, 3)), np.zeros((2, 4, 5)))


class TestSoftmaxNormalize:
    def test_sums_to_one_and_monotone(self):
        rng = np.random.default_rng(2)
        logits = rng.normal(0, 10, (5, 6, 6))
        w = softmax_normalize(logits)
        np.testing.assert_allclose(w.sum(axis=0), 1.0, atol=1e-12)
        assert np.all(w > 0)
        # the largest logit gets the largest weight
        np.testing.assert_array_equal(np.argmax(w, axis=0), np.argmax(logits, axis=0))

    def test_large_logits_stable(self):
        w = softmax_normalize(np.array([[[1000.0]], [[999.0]]]))
        assert np.isfinite(w).all()


class TestUniqueColorCount:
    def test_known_counts(self):
        img = np.zeros((4, 4, 3))
        assert unique_color_count(img) == 1
        img[0, 0] = [1.0, 0.0, 0.0]
        img[0, 1] = [0.0, 1.0, 0.0]
        assert unique_color_count(img) == 3

    def test_independent_set_count(self):
        rng = np.random.default_rng(12)
        raw = rng.integers(0, 4, (16, 16, 3), dtype=np.uint8) * 85
        img = Image.from_bytes(raw)
        want = len({tuple(px) for px in raw.reshape(-1, 3)})
        assert unique_color_count(img) == want

    def test_quantization_merges_close_floats(self):
        img = np.array([[[0.5, 0.5, 0.5], [0.5005, 0.5, 0.5]]])
        assert unique_color_count(img) == 1


class TestCollapseAndExpansion:
    """The color-diversity law the whole architecture is built around."""

    @staticmethod
    def _random_curve_set(rng, length=256):
        # mix of smooth monotone-ish and wild curves
        pts = rng.uniform(0, 1, (3, 8))
        return bicubic_upsample(pts, length)

    def test_single_curve_never_expands(self):
        rng = np.random.default_rng(0)
        for _ in range(25):
            raw = rng.integers(0, 256, (24, 24, 3), dtype=np.uint8)
            img = Image.from_bytes(raw)
            out = apply_curve(img, self._random_curve_set(rng))
            assert unique_color_count(out) <= unique_color_count(img)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=40, deadline=None)
    def test_single_curve_never_expands_property(self, seed):
        rng = np.random.default_rng(seed)
        raw = rng.integers(0, 256, (12, 12, 3), dtype=np.uint8)
        img = Image.from_bytes(raw)
        out = apply_curve(img, self._random_curve_set(rng, length=64))
        assert unique_color_count(out) <= unique_color_count(img)

    def test_two_region_fusion_expands(self):
        # 2 input colors, 2 curve sets, 2 weight regions -> exactly 4 colors
        img = np.zeros((4, 4, 3))
        img[:, :2] = 0.25
        img[:, 2:] = 0.75
        assert unique_color_count(img) == 2

        ident = np.tile(identity_curve(256), (3, 1))
        halved = ident * 0.5
        candidates = np.stack([apply_curve(img, ident), apply_curve(img, halved)])

        weights = np.zeros((2, 4, 4))
        weights[0, :2] = 1.0  # top rows keep the identity
        weights[1, 2:] = 1.0  # bottom rows darken
        fused = fuse(candidates, weights)
        # {0.25, 0.75} top, {0.125, 0.375} bottom: four distinct colors
        assert unique_color_count(fused) == 4


class TestQuantizeWeightMaps:
    def test_sums_exactly_255(self):
        rng = np.random.default_rng(1)
        logits = rng.normal(0, 3, (5, 31, 17))
        planes = quantize_weight_maps(softmax_normalize(logits))
        assert planes.dtype == np.uint8
        np.testing.assert_array_equal(planes.astype(int).sum(axis=0), 255)

    def test_within_one_of_plain_rounding(self):
        rng = np.random.default_rng(2)
        w = softmax_normalize(rng.normal(0, 2, (3, 9, 9)))
        planes = quantize_weight_maps(w).astype(int)
        plain = np.floor(w * 255.0 + 0.5).astype(int)
        assert np.abs(planes - plain).max() <= 1

    def test_one_hot_maps(self):
        w = np.zeros((4, 2, 2))
        w[2] = 1.0
        planes = quantize_weight_maps(w)
        assert planes[2].min() == 255
        assert planes.astype(int).sum(axis=0).max() == 255

    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            quantize_weight_maps(np.full((2, 3, 3), 0.7))
