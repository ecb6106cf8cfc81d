"""Image container, color-space conversions, and 8-bit PNG I/O.

Images are H x W x 3 float arrays in [0, 1], channel order R, G, B.
PNG (8-bit RGB/RGBA, alpha dropped) is the only raster container; byte
values map to floats as byte/255 exactly, and export quantizes with
round-half-up so byte round trips are deterministic.
"""

from __future__ import annotations

import io
import os
import struct
from dataclasses import dataclass

import numpy as np
from PIL import Image as PILImage


class ImageIOError(Exception):
    """Base class for raster I/O failures."""


class UnsupportedBitDepthError(ImageIOError):
    """Raster is not an 8-bit RGB/RGBA PNG."""


class TruncatedStreamError(ImageIOError):
    """Raster stream ended before the pixel data could be decoded."""


@dataclass(frozen=True)
class Image:
    """Immutable H x W x 3 RGB raster with float values in [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        if self.data.ndim != 3 or self.data.shape[2] != 3:
            raise ValueError(f"expected H x W x 3 data, got shape {self.data.shape}")
        if self.data.shape[0] < 1 or self.data.shape[1] < 1:
            raise ValueError("image must be at least 1 x 1")
        if not np.isfinite(self.data).all():
            raise ValueError("image values must be finite")
        self.data.setflags(write=False)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @classmethod
    def from_array(cls, values: np.ndarray) -> "Image":
        """Build an Image from a float array, clamping into [0, 1]."""
        values = np.asarray(values, dtype=np.float64)
        if not np.isfinite(values).all():
            raise ValueError("image values must be finite")
        return cls(np.clip(values, 0.0, 1.0))

    @classmethod
    def from_bytes(cls, values: np.ndarray) -> "Image":
        """Build an Image from uint8 data; floats are byte/255 exactly."""
        values = np.asarray(values)
        if values.dtype != np.uint8:
            raise ValueError("from_bytes expects uint8 data")
        return cls(values.astype(np.float64) / 255.0)

    def to_bytes(self) -> np.ndarray:
        """Quantize to uint8 with round-half-up after clamping to [0, 1]."""
        return quantize_to_bytes(self.data)


@dataclass(frozen=True)
class HsvImage:
    """H x W x 3 raster with channels H in [0, 1) wrapped, S and V in [0, 1]."""

    data: np.ndarray


@dataclass(frozen=True)
class LabImage:
    """H x W x 3 raster holding CIE L* in [0, 100], a*, b* (D65, sRGB primaries)."""

    data: np.ndarray


def quantize_to_bytes(values: np.ndarray) -> np.ndarray:
    """Clamp to [0, 1] and quantize as round(v * 255), rounding half up."""
    clipped = np.clip(values, 0.0, 1.0)
    return np.floor(clipped * 255.0 + 0.5).astype(np.uint8)


def _parse_png_header(head: bytes, origin: str) -> tuple[int, int]:
    """Return (bit_depth, color_type) from the first 26 PNG bytes."""
    signature = b"\x89PNG\r\n\x1a\n"
    if len(head) < 26 or not head.startswith(signature):
        raise TruncatedStreamError(f"not a complete PNG stream: {origin}")
    if head[12:16] != b"IHDR":
        raise TruncatedStreamError(f"PNG missing IHDR chunk: {origin}")
    bit_depth, color_type = struct.unpack(">BB", head[24:26])
    return bit_depth, color_type


def _read_png_header(path: str) -> tuple[int, int]:
    with open(path, "rb") as fh:
        head = fh.read(26)
    return _parse_png_header(head, str(path))


def load_image(path: str) -> Image:
    """Load an 8-bit RGB/RGBA PNG; alpha is discarded.

    Raises FileNotFoundError for missing files, UnsupportedBitDepthError for
    non-8-bit or non-RGB rasters, and TruncatedStreamError for streams that
    end mid-decode.
    """
    if not os.path.isfile(path):
        raise FileNotFoundError(f"no such image file: {path}")
    bit_depth, color_type = _read_png_header(path)
    if bit_depth != 8:
        raise UnsupportedBitDepthError(
            f"{path}: bit depth {bit_depth}, only 8-bit PNG is supported"
        )
    # Color types 2 (RGB) and 6 (RGBA); palette/gray rasters are out of contract.
    if color_type not in (2, 6):
        raise UnsupportedBitDepthError(
            f"{path}: PNG color type {color_type}, only RGB/RGBA is supported"
        )
    try:
        with PILImage.open(path) as pil:
            pil.load()
            raw = np.asarray(pil, dtype=np.uint8)[:, :, :3]
    except (OSError, SyntaxError, ValueError) as exc:
        raise TruncatedStreamError(f"failed to decode {path}: {exc}") from exc
    return Image.from_bytes(raw)


def decode_png(data: bytes, origin: str = "<bytes>") -> Image:
    """Decode an in-memory PNG with the same checks as ``load_image``."""
    bit_depth, color_type = _parse_png_header(data[:26], origin)
    if bit_depth != 8:
        raise UnsupportedBitDepthError(
            f"{origin}: bit depth {bit_depth}, only 8-bit PNG is supported"
        )
    if color_type not in (2, 6):
        raise UnsupportedBitDepthError(
            f"{origin}: PNG color type {color_type}, only RGB/RGBA is supported"
        )
    try:
        with PILImage.open(io.BytesIO(data)) as pil:
            pil.load()
            raw = np.asarray(pil, dtype=np.uint8)[:, :, :3]
    except (OSError, SyntaxError, ValueError) as exc:
        raise TruncatedStreamError(f"failed to decode {origin}: {exc}") from exc
    return Image.from_bytes(raw)


def encode_png(img: Image) -> bytes:
    """Serialize an Image to PNG bytes (round-half-up quantization)."""
    buf = io.BytesIO()
    PILImage.fromarray(img.to_bytes(), mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def encode_gray_png(plane: np.ndarray) -> bytes:
    """Serialize a (H, W) uint8 plane to a single-channel grayscale PNG."""
    arr = np.asarray(plane)
    if arr.dtype != np.uint8 or arr.ndim != 2:
        raise ValueError(f"expected (H, W) uint8 plane, got {arr.dtype} {arr.shape}")
    buf = io.BytesIO()
    PILImage.fromarray(arr, mode="L").save(buf, format="PNG")
    return buf.getvalue()


def save_image(img: Image, path: str) -> None:
    """Write an Image as an 8-bit RGB PNG (round-half-up quantization)."""
    PILImage.fromarray(img.to_bytes(), mode="RGB").save(path, format="PNG")


def rgb_to_hsv(img: Image) -> HsvImage:
    """Standard hexcone HSV; gray pixels get S=0 and H=0 by convention."""
    rgb = img.data
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    maxc = rgb.max(axis=-1)
    minc = rgb.min(axis=-1)
    delta = maxc - minc
    chromatic = delta > 0

    safe_delta = np.where(chromatic, delta, 1.0)
    hr = np.mod((g - b) / safe_delta, 6.0)
    hg = (b - r) / safe_delta + 2.0
    hb = (r - g) / safe_delta + 4.0
    h = np.where(maxc == r, hr, np.where(maxc == g, hg, hb)) / 6.0
    h = np.where(chromatic, np.mod(h, 1.0), 0.0)

    s = np.where(maxc > 0, delta / np.where(maxc > 0, maxc, 1.0), 0.0)
    return HsvImage(np.stack([h, s, maxc], axis=-1))


def hsv_to_rgb(hsv: HsvImage) -> Image:
    """Inverse hexcone transform; exact round trip within float tolerance."""
    h, s, v = hsv.data[..., 0], hsv.data[..., 1], hsv.data[..., 2]
    h6 = np.mod(h, 1.0) * 6.0
    i = np.floor(h6).astype(np.int64) % 6
    f = h6 - np.floor(h6)
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))

    r = np.choose(i, [v, q, p, p, t, v])
    g = np.choose(i, [t, v, v, q, p, p])
    b = np.choose(i, [p, p, t, v, v, q])
    return Image(np.clip(np.stack([r, g, b], axis=-1), 0.0, 1.0))


# sRGB-to-XYZ matrix (D65); reference white is its row sums so that
# RGB (1,1,1) lands exactly on L*=100, a*=b*=0.
_SRGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_WHITE = _SRGB_TO_XYZ.sum(axis=1)


def srgb_to_linear(values: np.ndarray) -> np.ndarray:
    """sRGB EOTF linearization (IEC 61966-2-1 piecewise transfer)."""
    return np.where(
        values <= 0.04045,
        values / 12.92,
        np.power((values + 0.055) / 1.055, 2.4),
    )


def rgb_to_lab(img: Image) -> LabImage:
    """sRGB-encoded values to CIE L*a*b* via linearization and D65 XYZ."""
    linear = srgb_to_linear(img.data)
    xyz = linear @ _SRGB_TO_XYZ.T
    ratio = xyz / _WHITE

    delta = 6.0 / 29.0
    f = np.where(
        ratio > delta**3,
        np.cbrt(ratio),
        ratio / (3.0 * delta**2) + 4.0 / 29.0,
    )
    fx, fy, fz = f[..., 0], f[..., 1], f[..., 2]
    lightness = 116.0 * fy - 16.0
    a = 500.0 * (fx - fy)
    b = 200.0 * (fy - fz)
    return LabImage(np.stack([lightness, a, b], axis=-1))


def luminance(img: Image) -> np.ndarray:
    """Per-pixel luma Y = 0.299 R + 0.587 G + 0.114 B."""
    return img.data @ np.array([0.299, 0.587, 0.114])
