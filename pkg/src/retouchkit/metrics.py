"""Quality metrics: PSNR, SSIM, mean CIE76 color difference, and the
distinct-color statistics used to compare retouching mechanisms.

SSIM here is differentiable (built on the autodiff kit) so the training
loss can share the exact same computation the evaluation reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import autodiff as ad
from .curves import unique_color_count
from .image import Image, rgb_to_lab

#: Returned by psnr() when the two images are exactly equal.
PSNR_INF = float("inf")

_SSIM_RADIUS = 5  # 11x11 window
_SSIM_SIGMA = 1.5
_SSIM_K1 = 0.01
_SSIM_K2 = 0.03


def _pixels(img) -> np.ndarray:
    if isinstance(img, Image):
        return img.data
    return np.asarray(img, dtype=float)


def psnr(a, b) -> float:
    """Peak signal-to-noise ratio in dB against a peak of 1.0."""
    a, b = _pixels(a), _pixels(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return PSNR_INF
    return -10.0 * math.log10(mse)


def mean_delta_e(a, b) -> float:
    """Mean per-pixel Euclidean distance in CIE Lab (the 1976 formula)."""
    a, b = _pixels(a), _pixels(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    lab_a = rgb_to_lab(Image(np.clip(a, 0.0, 1.0)))
    lab_b = rgb_to_lab(Image(np.clip(b, 0.0, 1.0)))
    return float(np.mean(np.sqrt(np.sum((lab_a.data - lab_b.data) ** 2, axis=2))))


def _mirror(i: int, n: int) -> int:
    """Reflect an index into [0, n) without repeating the edge sample."""
    while i < 0 or i >= n:
        if i < 0:
            i = -i
        if i >= n:
            i = 2 * (n - 1) - i
    return i


@lru_cache(maxsize=32)
def gaussian_matrix(n: int) -> np.ndarray:
    """(n, n) matrix applying the 11-tap Gaussian with mirrored borders."""
    taps = np.exp(
        -np.arange(-_SSIM_RADIUS, _SSIM_RADIUS + 1) ** 2 / (2.0 * _SSIM_SIGMA**2)
    )
    taps /= taps.sum()
    mat = np.zeros((n, n))
    for o in range(n):
        for k, g in zip(range(-_SSIM_RADIUS, _SSIM_RADIUS + 1), taps):
            mat[o, _mirror(o + k, n)] += g
    mat.setflags(write=False)
    return mat


def ssim_tensor(x: ad.Tensor, y: ad.Tensor) -> ad.Tensor:
    """Mean SSIM over a (B, C, H, W) pair as a differentiable scalar.

    Gaussian-windowed local statistics (window 11, sigma 1.5, data range
    1.0), averaged over channels and pixels. Identical inputs give
    exactly 1 because numerator and denominator become the same arrays.
    """
    _, _, height, width = x.data.shape
    row = gaussian_matrix(height)
    col = gaussian_matrix(width)

    def blur(t):
        return ad.separable_transform(t, row, col)

    c1 = _SSIM_K1**2
    c2 = _SSIM_K2**2
    mu_x, mu_y = blur(x), blur(y)
    xx, yy, xy = blur(ad.mul(x, x)), blur(ad.mul(y, y)), blur(ad.mul(x, y))
    mu_xx, mu_yy, mu_xy = ad.mul(mu_x, mu_x), ad.mul(mu_y, mu_y), ad.mul(mu_x, mu_y)
    var_x = ad.sub(xx, mu_xx)
    var_y = ad.sub(yy, mu_yy)
    cov = ad.sub(xy, mu_xy)
    numerator = ad.mul(ad.add(ad.mul(mu_xy, 2.0), c1), ad.add(ad.mul(cov, 2.0), c2))
    denominator = ad.mul(
        ad.add(ad.add(mu_xx, mu_yy), c1), ad.add(ad.add(var_x, var_y), c2)
    )
    return ad.mean_all(ad.div(numerator, denominator))


def ssim_value(a, b) -> float:
    """SSIM between two (H, W, 3) images (or Images) as a plain float."""
    a, b = _pixels(a), _pixels(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    xa = ad.Tensor(a.transpose(2, 0, 1)[None])
    xb = ad.Tensor(b.transpose(2, 0, 1)[None])
    return float(ssim_tensor(xa, xb).data)


@dataclass(frozen=True)
class EvalReport:
    """Aggregate metrics over an evaluation set (unweighted means)."""

    psnr: float
    ssim: float
    delta_e: float
    unique_colors_in: float
    unique_colors_out: float
    unique_colors_target: float
    pairs: int

    def to_dict(self) -> dict:
        return {
            "psnr": self.psnr,
            "ssim": self.ssim,
            "delta_e": self.delta_e,
            "unique_colors_in": self.unique_colors_in,
            "unique_colors_out": self.unique_colors_out,
            "unique_colors_target": self.unique_colors_target,
            "pairs": self.pairs,
        }


def evaluate(model, pairs) -> EvalReport:
    """Run `model` over (input, target, text) triples and average metrics.

    Outputs are clamped to [0, 1] first — metrics describe the image a
    user would actually export.
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("evaluation set is empty")
    scores = {"psnr": [], "ssim": [], "de": [], "uin": [], "uout": [], "utgt": []}
    for x, y, text in pairs:
        out = np.clip(model.forward(x, text).output, 0.0, 1.0)
        scores["psnr"].append(psnr(out, y))
        scores["ssim"].append(ssim_value(out, y))
        scores["de"].append(mean_delta_e(out, y))
        scores["uin"].append(unique_color_count(x))
        scores["uout"].append(unique_color_count(out))
        scores["utgt"].append(unique_color_count(y))
    return EvalReport(
        psnr=float(np.mean(scores["psnr"])),
        ssim=float(np.mean(scores["ssim"])),
        delta_e=float(np.mean(scores["de"])),
        unique_colors_in=float(np.mean(scores["uin"])),
        unique_colors_out=float(np.mean(scores["uout"])),
        unique_colors_target=float(np.mean(scores["utgt"])),
        pairs=len(pairs),
    )
