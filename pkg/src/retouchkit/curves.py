"""Tone-curve engine: densify sparse control points, apply per-channel
curves to pixels, and fuse candidate renderings with per-pixel weights.

A single curve is a global per-channel lookup table, so it can only
merge colors — the distinct-color count never goes up. Blending several
curve outputs with content-dependent weights lifts that ceiling, which
is the whole point of predicting weight maps alongside curves.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .image import Image, quantize_to_bytes

_KEYS_A = -0.5  # cubic convolution kernel sharpness


def _as_pixels(img) -> np.ndarray:
    """Accept an Image or a raw (H, W, 3) float array."""
    if isinstance(img, Image):
        return img.data
    arr = np.asarray(img, dtype=float)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) pixels, got shape {arr.shape}")
    return arr


def _keys_kernel(s: np.ndarray) -> np.ndarray:
    """Cubic convolution kernel with a = -0.5 (exact on linear ramps)."""
    s = np.abs(s)
    a = _KEYS_A
    near = (a + 2.0) * s**3 - (a + 3.0) * s**2 + 1.0
    far = a * s**3 - 5.0 * a * s**2 + 8.0 * a * s - 4.0 * a
    return np.where(s <= 1.0, near, np.where(s < 2.0, far, 0.0))


@lru_cache(maxsize=16)
def bicubic_matrix(points: int, length: int) -> np.ndarray:
    """(length, points) interpolation matrix; rows sum to 1.

    Output index l samples position t = l*(points-1)/(length-1), so both
    endpoints land on control points exactly. The two virtual neighbors
    beyond each end are linear extrapolations of the edge pair; unlike
    edge replication this keeps the interpolant exact on straight ramps
    all the way to the borders, which the identity-start model relies on.
    Cached because every forward pass reuses the same matrix.
    """
    if points < 4:
        raise ValueError(f"need at least 4 control points, got {points}")
    if length < 2:
        raise ValueError(f"curve length must be at least 2, got {length}")
    mat = np.zeros((length, points))
    for l in range(length):
        t = l * (points - 1) / (length - 1)
        base = int(np.floor(t))
        frac = t - base
        for shift in (-1, 0, 1, 2):
            weight = float(_keys_kernel(np.asarray(frac - shift)))
            if weight == 0.0:
                continue
            idx = base + shift
            if idx < 0:
                # p[-k] := p[0] - k*(p[1] - p[0])
                k = -idx
                mat[l, 0] += (1 + k) * weight
                mat[l, 1] -= k * weight
            elif idx > points - 1:
                # p[P-1+k] := p[P-1] + k*(p[P-1] - p[P-2])
                k = idx - (points - 1)
                mat[l, points - 1] += (1 + k) * weight
                mat[l, points - 2] -= k * weight
            else:
                mat[l, idx] += weight
    mat.setflags(write=False)
    return mat


def bicubic_upsample(params: np.ndarray, length: int = 256) -> np.ndarray:
    """Densify control points (..., P) to curves (..., length)."""
    params = np.asarray(params, dtype=float)
    return params @ bicubic_matrix(params.shape[-1], length).T


def apply_curve(img, curve_set: np.ndarray) -> np.ndarray:
    """Map pixels through per-channel curves (3, L); returns unclamped floats.

    Pixel value v lands at curve position v*(L-1) and is linearly
    interpolated between the two bracketing entries, so exact 8-bit
    levels hit entries exactly when L = 256.
    """
    pixels = _as_pixels(img)
    curve_set = np.asarray(curve_set, dtype=float)
    if curve_set.ndim != 2 or curve_set.shape[0] != 3:
        raise ValueError(f"curve set must be (3, L), got {curve_set.shape}")
    length = curve_set.shape[1]
    pos = np.clip(pixels, 0.0, 1.0) * (length - 1)
    idx = np.clip(np.floor(pos).astype(np.int64), 0, length - 2)
    frac = pos - idx
    out = np.empty_like(pixels)
    for c in range(3):
        lo = curve_set[c][idx[:, :, c]]
        hi = curve_set[c][idx[:, :, c] + 1]
        out[:, :, c] = lo * (1.0 - frac[:, :, c]) + hi * frac[:, :, c]
    return out


def identity_curve(length: int = 256) -> np.ndarray:
    """The no-op lookup table: entry l = l/(L-1)."""
    return np.linspace(0.0, 1.0, length)


def softmax_normalize(logits: np.ndarray) -> np.ndarray:
    """Per-pixel softmax across the leading map axis, max-subtracted."""
    logits = np.asarray(logits, dtype=float)
    shifted = logits - logits.max(axis=0, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=0, keepdims=True)


def fuse(candidates: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Per-pixel convex combination: sum_j weights[j] * candidates[j].

    candidates: (N, H, W, 3); weights: (N, H, W) already normalized.
    """
    candidates = np.asarray(candidates, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if candidates.ndim != 4 or weights.ndim != 3:
        raise ValueError("fuse expects (N, H, W, 3) candidates and (N, H, W) weights")
    if candidates.shape[:3] != weights.shape:
        raise ValueError(
            f"candidate {candidates.shape} and weight {weights.shape} grids disagree"
        )
    return np.einsum("nhwc,nhw->hwc", candidates, weights)


def unique_color_count(img) -> int:
    """Number of distinct 8-bit RGB triples after quantization."""
    pixels = _as_pixels(img)
    rgb = quantize_to_bytes(np.clip(pixels, 0.0, 1.0)).astype(np.uint32)
    codes = (rgb[:, :, 0] << 16) | (rgb[:, :, 1] << 8) | rgb[:, :, 2]
    return int(np.unique(codes).size)


def quantize_weight_maps(weights: np.ndarray) -> np.ndarray:
    """Quantize per-pixel convex weights (N, H, W) to uint8 planes.

    Plain rounding of each plane can leave the per-pixel byte sum at
    254..256; the rounding residual is folded into the dominant plane so
    every pixel sums to exactly 255.
    """
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 3:
        raise ValueError(f"expected (N, H, W) weights, got shape {w.shape}")
    sums = w.sum(axis=0)
    if not np.allclose(sums, 1.0, atol=1e-4):
        raise ValueError("weight maps must sum to 1 at every pixel")
    q = np.floor(w * 255.0 + 0.5).astype(np.int64)
    residual = 255 - q.sum(axis=0)
    dominant = np.argmax(w, axis=0)[None]
    planes = np.moveaxis(q, 0, -1)
    idx = np.moveaxis(dominant, 0, -1)
    np.put_along_axis(planes, idx, np.take_along_axis(planes, idx, -1) + residual[:, :, None], -1)
    q = np.moveaxis(planes, -1, 0)
    if q.min() < 0 or q.max() > 255:
        raise ValueError("weight quantization left a byte out of range")
    return q.astype(np.uint8)
