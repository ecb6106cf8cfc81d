"""Six pooled style measurements and their discretization into levels 1-5.

The attribute order is fixed everywhere in the package:

    mean brightness, mean saturation, saturation std, brightness std,
    color richness, contrast

Raw formulas are deterministic pixel statistics: HSV means/stds, the
Hasler-Suesstrunk colorfulness measure, and RMS luminance contrast.
All standard deviations are population (not sample) ones so tiny test
images are unambiguous.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .image import Image, luminance, rgb_to_hsv

ATTRIBUTE_NAMES = (
    "mean_brightness",
    "mean_saturation",
    "saturation_std",
    "brightness_std",
    "color_richness",
    "contrast",
)

# Declared raw ranges and uniform bin edges (boundary value goes to the
# upper bin). Means live on [0, 1]; spread-type attributes on [0, 0.5].
_MEAN_EDGES = (0.2, 0.4, 0.6, 0.8)
_SPREAD_EDGES = (0.1, 0.2, 0.3, 0.4)
ATTRIBUTE_RANGES = ((0.0, 1.0), (0.0, 1.0)) + ((0.0, 0.5),) * 4
ATTRIBUTE_BIN_EDGES = (_MEAN_EDGES, _MEAN_EDGES) + (_SPREAD_EDGES,) * 4


@dataclass(frozen=True)
class AttributeVector:
    """Raw measurements plus their discretized levels, in canonical order.

    Levels are integers 1..5 when produced by `discretize`; predicted
    target vectors may carry fractional levels in [1, 5].
    """

    raw: np.ndarray
    levels: np.ndarray

    def __post_init__(self):
        if self.raw.shape != (6,) or self.levels.shape != (6,):
            raise ValueError("attribute vectors have exactly six entries")
        if np.any(self.levels < 1) or np.any(self.levels > 5):
            raise ValueError("levels must lie in [1, 5]")


def compute_raw_attributes(img) -> np.ndarray:
    """Pooled statistics over all pixels, in canonical attribute order.

    Accepts an Image or any (H, W, 3) array of values in [0, 1].
    """
    if not isinstance(img, Image):
        img = Image.from_array(img)
    hsv = rgb_to_hsv(img).data
    sat = hsv[..., 1]
    val = hsv[..., 2]

    rgb = img.data
    rg = rgb[..., 0] - rgb[..., 1]
    yb = 0.5 * (rgb[..., 0] + rgb[..., 1]) - rgb[..., 2]
    colorfulness = np.sqrt(rg.var() + yb.var()) + 0.3 * np.sqrt(
        rg.mean() ** 2 + yb.mean() ** 2
    )

    return np.array(
        [
            val.mean(),
            sat.mean(),
            sat.std(),
            val.std(),
            colorfulness,
            luminance(img).std(),
        ]
    )


def discretize(raw: np.ndarray) -> np.ndarray:
    """Map raw values onto integer levels 1..5 by uniform binning.

    Values are clamped to the attribute's declared range first; a value
    exactly on a bin edge belongs to the upper bin.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if raw.shape != (6,):
        raise ValueError("expected six raw attribute values")
    if not np.isfinite(raw).all():
        raise ValueError("raw attribute values must be finite")
    levels = np.empty(6, dtype=np.int64)
    for i, (value, (lo, hi), edges) in enumerate(
        zip(raw, ATTRIBUTE_RANGES, ATTRIBUTE_BIN_EDGES)
    ):
        clamped = min(max(value, lo), hi)
        levels[i] = 1 + np.searchsorted(edges, clamped, side="right")
    return levels


def attribute_vector(img: Image) -> AttributeVector:
    """Measure and discretize in one step; levels == discretize(raw)."""
    raw = compute_raw_attributes(img)
    return AttributeVector(raw=raw, levels=discretize(raw))
