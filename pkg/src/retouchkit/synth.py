"""Deterministic synthetic multi-expert retouching dataset.

Base images are smooth random cosine color fields with a few solid
shapes dropped on top. Three parametric "experts" stand in for human
retouchers: two apply global tone/saturation moves in opposite
directions, and one is content-dependent — its gamma flips between a
strong boost and a strong crush depending on locally averaged
luminance. That expert is the reason a single global curve can never
fit this dataset exactly: it maps pixels with identical RGB values to
different targets depending on their surroundings.

Everything is a pure function of (seed, config); images round-trip
through 8-bit quantization before use so in-memory arrays match the
PNG tree byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .image import HsvImage, Image, hsv_to_rgb, load_image, rgb_to_hsv, save_image
from .training import StylePool

_LUMA = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True)
class ContentRule:
    """Pixels whose blurred luminance exceeds the threshold get alt_gamma."""

    threshold: float = 0.5
    blur_sigma: float = 3.0  # pixels; 0 means pointwise luminance
    alt_gamma: tuple[float, float, float] = (0.55, 0.55, 0.55)

    def mask(self, pixels: np.ndarray) -> np.ndarray:
        lum = pixels @ _LUMA
        if self.blur_sigma > 0:
            lum = ndimage.gaussian_filter(lum, self.blur_sigma, mode="reflect")
        return lum > self.threshold


@dataclass(frozen=True)
class ExpertStyle:
    """One synthetic retoucher: gamma, saturation, brightness, optional rule."""

    name: str
    gamma: tuple[float, float, float] = (1.0, 1.0, 1.0)
    saturation_scale: float = 1.0
    brightness_offset: float = 0.0
    rule: ContentRule | None = None

    def __post_init__(self):
        gammas = list(self.gamma) + (list(self.rule.alt_gamma) if self.rule else [])
        if any(not 0.3 <= g <= 3.0 for g in gammas):
            raise ValueError(f"{self.name}: gamma outside safe range [0.3, 3]")
        if not -0.3 <= self.brightness_offset <= 0.3:
            raise ValueError(f"{self.name}: offset outside safe range [-0.3, 0.3]")
        if not 0.0 <= self.saturation_scale <= 3.0:
            raise ValueError(f"{self.name}: saturation scale outside [0, 3]")


def default_experts() -> tuple[ExpertStyle, ...]:
    """Two opposed global stylists plus the content-dependent one."""
    return (
        ExpertStyle(
            name="warm",
            gamma=(0.8, 1.0, 1.25),
            saturation_scale=1.3,
            brightness_offset=0.06,
        ),
        ExpertStyle(
            name="cool",
            gamma=(1.25, 1.0, 0.8),
            saturation_scale=0.75,
            brightness_offset=-0.06,
        ),
        ExpertStyle(
            name="split",
            gamma=(1.7, 1.7, 1.7),
            rule=ContentRule(threshold=0.5, blur_sigma=0.0, alt_gamma=(0.55, 0.55, 0.55)),
        ),
    )


def apply_expert(img, style: ExpertStyle) -> np.ndarray:
    """Retouch one image: per-pixel gamma choice, gamma, saturation, offset.

    Returns clamped float pixels in [0, 1].
    """
    pixels = img.data if isinstance(img, Image) else np.asarray(img, dtype=float)
    base = np.power(pixels, np.asarray(style.gamma))
    if style.rule is not None:
        alt = np.power(pixels, np.asarray(style.rule.alt_gamma))
        out = np.where(style.rule.mask(pixels)[..., None], alt, base)
    else:
        out = base
    if style.saturation_scale != 1.0:
        hsv = rgb_to_hsv(Image.from_array(out)).data.copy()
        hsv[..., 1] = np.clip(hsv[..., 1] * style.saturation_scale, 0.0, 1.0)
        out = hsv_to_rgb(HsvImage(hsv)).data
    return np.clip(out + style.brightness_offset, 0.0, 1.0)


def generate_base(seed: int, count: int, size: int = 64, modes: int = 6,
                  min_shapes: int = 1, max_shapes: int = 3) -> list[np.ndarray]:
    """Random smooth color fields plus solid shapes, values in [0, 1].

    Shape colors are drawn from a two-color palette per image, so the
    same flat color usually appears in different neighborhoods — handy
    later for proving content dependence.
    """
    if size < 16:
        raise ValueError(f"images must be at least 16 px, got {size}")
    rng = np.random.default_rng(seed)
    grid = np.linspace(0.0, 1.0, size)
    yy, xx = np.meshgrid(grid, grid, indexing="ij")
    images = []
    for _ in range(count):
        img = np.zeros((size, size, 3))
        for _ in range(int(rng.integers(max(modes // 2, 1), modes + 1)) if modes else 0):
            fx, fy = rng.uniform(0.4, 3.0, size=2)
            phase = rng.uniform(0.0, 2.0 * np.pi)
            amp = rng.uniform(0.1, 0.35)
            channel_mix = rng.uniform(-1.0, 1.0, size=3)
            wave = np.cos(2.0 * np.pi * (fx * xx + fy * yy) + phase)
            img += amp * wave[..., None] * channel_mix
        span = img.max() - img.min()
        if span > 1e-9:
            img = 0.08 + 0.84 * (img - img.min()) / span
        else:
            img = np.full((size, size, 3), 0.5)

        palette = rng.uniform(0.05, 0.95, size=(2, 3))
        for _ in range(int(rng.integers(min_shapes, max_shapes + 1)) if max_shapes else 0):
            color = palette[int(rng.integers(2))]
            if rng.integers(2) == 0:
                h = int(rng.integers(size // 8, size // 3))
                w = int(rng.integers(size // 8, size // 3))
                top = int(rng.integers(0, size - h))
                left = int(rng.integers(0, size - w))
                img[top : top + h, left : left + w] = color
            else:
                radius = int(rng.integers(size // 10, size // 4))
                cy = int(rng.integers(radius, size - radius))
                cx = int(rng.integers(radius, size - radius))
                disk = (yy * (size - 1) - cy) ** 2 + (xx * (size - 1) - cx) ** 2
                img[disk <= radius**2] = color
        images.append(img)
    return images


@dataclass(frozen=True)
class SynthConfig:
    count: int = 64
    size: int = 64
    train: int = 48
    val: int = 8
    test: int = 8
    modes: int = 6
    min_shapes: int = 1
    max_shapes: int = 3

    def __post_init__(self):
        if self.train + self.val + self.test != self.count:
            raise ValueError("split sizes must sum to the image count")

    def to_dict(self) -> dict:
        return {
            "count": self.count, "size": self.size, "train": self.train,
            "val": self.val, "test": self.test, "modes": self.modes,
            "min_shapes": self.min_shapes, "max_shapes": self.max_shapes,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SynthConfig":
        return cls(**{k: int(v) for k, v in d.items()})


@dataclass
class SynthDataset:
    seed: int
    config: SynthConfig
    inputs: list[np.ndarray]
    experts: dict[str, list[np.ndarray]]
    splits: dict[str, list[int]]

    def pools(self, split: str) -> list[StylePool]:
        """Style pools (input + all expert versions) for one split."""
        return [
            StylePool.build(
                self.inputs[i], [self.experts[name][i] for name in self.experts]
            )
            for i in self.splits[split]
        ]

    def eval_pairs(self, split: str) -> list[tuple[np.ndarray, np.ndarray, str]]:
        """Deterministic (input, target, text) triples covering every expert."""
        from .attributes import attribute_vector
        from .styletext import render_text

        pairs = []
        for i in self.splits[split]:
            x = self.inputs[i]
            x_levels = attribute_vector(Image.from_array(x)).levels
            for name in self.experts:
                y = self.experts[name][i]
                y_levels = attribute_vector(Image.from_array(y)).levels
                pairs.append((x, y, render_text(y_levels - x_levels)))
        return pairs


def _quantized(pixels: np.ndarray) -> np.ndarray:
    """Round-trip through 8-bit so arrays match their PNG files exactly."""
    return Image.from_array(pixels).to_bytes().astype(np.float64) / 255.0


def build_dataset(seed: int = 7, config: SynthConfig | None = None,
                  out_dir=None,
                  experts: tuple[ExpertStyle, ...] | None = None) -> SynthDataset:
    """Generate the full dataset; optionally write the PNG tree + manifest."""
    config = config or SynthConfig()
    experts = experts if experts is not None else default_experts()
    raw = generate_base(
        seed, config.count, config.size, config.modes,
        config.min_shapes, config.max_shapes,
    )
    inputs = [_quantized(img) for img in raw]
    versions = {
        style.name: [_quantized(apply_expert(x, style)) for x in inputs]
        for style in experts
    }
    order = list(range(config.count))
    splits = {
        "train": order[: config.train],
        "val": order[config.train : config.train + config.val],
        "test": order[config.train + config.val :],
    }
    dataset = SynthDataset(
        seed=seed, config=config, inputs=inputs, experts=versions, splits=splits
    )
    if out_dir is not None:
        _write_tree(dataset, Path(out_dir))
    return dataset


def _write_tree(dataset: SynthDataset, root: Path) -> None:
    root.mkdir(parents=True, exist_ok=True)
    (root / "inputs").mkdir(exist_ok=True)
    for i, x in enumerate(dataset.inputs):
        save_image(Image.from_array(x), root / "inputs" / f"{i:04d}.png")
    for name, targets in dataset.experts.items():
        expert_dir = root / f"expert_{name}"
        expert_dir.mkdir(exist_ok=True)
        for i, y in enumerate(targets):
            save_image(Image.from_array(y), expert_dir / f"{i:04d}.png")
    manifest = {
        "seed": dataset.seed,
        "config": dataset.config.to_dict(),
        "splits": dataset.splits,
        "experts": list(dataset.experts),
    }
    (root / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    )


def load_dataset(root) -> SynthDataset:
    """Read back a tree written by build_dataset."""
    root = Path(root)
    manifest = json.loads((root / "manifest.json").read_text())
    config = SynthConfig.from_dict(manifest["config"])
    inputs = [
        load_image(root / "inputs" / f"{i:04d}.png").data for i in range(config.count)
    ]
    experts = {
        name: [
            load_image(root / f"expert_{name}" / f"{i:04d}.png").data
            for i in range(config.count)
        ]
        for name in manifest["experts"]
    }
    return SynthDataset(
        seed=int(manifest["seed"]),
        config=config,
        inputs=inputs,
        experts=experts,
        splits={k: [int(i) for i in v] for k, v in manifest["splits"].items()},
    )
