"""Losses, preference-pool sampling, and the optimization loop.

Each base image owns a pool of retouched versions (one per synthetic
expert). Every time an image is drawn, one version is sampled uniformly
and the guiding sentence is rendered from that version's actual
attribute shift — the network is always told the direction of the edit
it is being asked to reproduce.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .attributes import attribute_vector
from .image import Image
from .metrics import psnr, ssim_tensor, ssim_value
from .styletext import parse_text, render_text


@dataclass(frozen=True)
class TrainConfig:
    """Optimization settings; the two learning rates keep the feature
    encoders an order of magnitude slower than the curve/weight heads."""

    alpha: float = 1.0  # pixel-difference weight
    beta: float = 0.4  # structural-difference weight
    epochs: int = 60
    batch_size: int = 4
    head_lr: float = 1e-3
    encoder_lr: float = 1e-3
    seed: int = 0
    n_sweep: tuple[int, ...] = (1, 3, 5)
    random_flip: bool = False
    random_crop_size: int = 0  # 0 disables cropping

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("loss weights must be non-negative")
        if self.epochs < 1:
            raise ValueError("need at least one epoch")
        if self.batch_size < 1:
            raise ValueError("batch size must be positive")

    def to_file(self, path) -> None:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = ",".join(str(v) for v in value)
            elif isinstance(value, bool):
                value = "true" if value else "false"
            lines.append(f"{f.name}={value}")
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def from_file(cls, path) -> "TrainConfig":
        raw: dict[str, str] = {}
        for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            raw[key.strip()] = value.strip()
        kwargs = {}
        by_name = {f.name: f for f in fields(cls)}
        for key, value in raw.items():
            if key not in by_name:
                raise ValueError(f"{path}: unknown setting {key!r}")
            kwargs[key] = _parse_setting(by_name[key].type, value)
        return cls(**kwargs)


def _parse_setting(type_name: str, value: str):
    if type_name == "int":
        return int(value)
    if type_name == "float":
        return float(value)
    if type_name == "bool":
        if value.lower() in ("true", "1", "yes"):
            return True
        if value.lower() in ("false", "0", "no"):
            return False
        raise ValueError(f"not a boolean: {value!r}")
    if type_name.startswith("tuple"):
        return tuple(int(v) for v in value.split(",") if v)
    return value


@dataclass
class StylePool:
    """One base image with every available retouched version of it."""

    image: np.ndarray
    versions: list[np.ndarray]
    image_levels: np.ndarray
    version_levels: list[np.ndarray]

    @classmethod
    def build(cls, image, versions) -> "StylePool":
        image = np.asarray(image, dtype=float)
        versions = [np.asarray(v, dtype=float) for v in versions]
        if not versions:
            raise ValueError("a style pool needs at least one retouched version")
        for v in versions:
            if v.shape != image.shape:
                raise ValueError(
                    f"version shape {v.shape} does not match input {image.shape}"
                )
        return cls(
            image=image,
            versions=versions,
            image_levels=attribute_vector(Image.from_array(image)).levels,
            version_levels=[
                attribute_vector(Image.from_array(v)).levels for v in versions
            ],
        )


def sample_pair(pool: StylePool, rng: np.random.Generator):
    """Draw (input, one uniformly chosen version, its guiding sentence)."""
    if not pool.versions:
        raise ValueError("cannot sample from an empty pool")
    pick = int(rng.integers(len(pool.versions)))
    delta = pool.version_levels[pick].astype(float) - pool.image_levels.astype(float)
    return pool.image, pool.versions[pick], render_text(delta)


# ---------------------------------------------------------------------------
# losses


def mse_loss(pred: ad.Tensor, target: ad.Tensor) -> ad.Tensor:
    if pred.data.shape != target.data.shape:
        raise ValueError(
            f"shape mismatch: {pred.data.shape} vs {target.data.shape}"
        )
    diff = ad.sub(pred, target)
    return ad.mean_all(ad.mul(diff, diff))


def ssim_loss(pred: ad.Tensor, target: ad.Tensor) -> ad.Tensor:
    if pred.data.shape != target.data.shape:
        raise ValueError(
            f"shape mismatch: {pred.data.shape} vs {target.data.shape}"
        )
    return ad.sub(1.0, ssim_tensor(pred, target))


def total_loss(pred: ad.Tensor, target: ad.Tensor, alpha: float = 1.0,
               beta: float = 0.4) -> ad.Tensor:
    """alpha * pixel MSE + beta * (1 - SSIM)."""
    loss = ad.mul(mse_loss(pred, target), alpha)
    if beta != 0.0:
        loss = ad.add(loss, ad.mul(ssim_loss(pred, target), beta))
    return loss


# ---------------------------------------------------------------------------
# the loop


@dataclass
class TrainResult:
    model: object
    history: list[dict]
    best_epoch: int
    best_val_psnr: float


def _batch_arrays(model, samples):
    """Stack sampled (x, y, text) triples into network-ready arrays."""
    pixels = np.stack([s[0].transpose(2, 0, 1) for s in samples])
    targets = np.stack([s[1].transpose(2, 0, 1) for s in samples])
    bands = np.asarray([parse_text(s[2]) for s in samples], dtype=np.int64)
    return (
        pixels.astype(model.dtype),
        targets.astype(model.dtype),
        bands,
    )


def validation_scores(model, pools) -> tuple[float, float]:
    """Mean PSNR/SSIM over every (image, version) pair, clamped outputs."""
    pools = list(pools)
    if not pools:
        return float("nan"), float("nan")
    psnrs, ssims = [], []
    for pool in pools:
        for target, target_levels in zip(pool.versions, pool.version_levels):
            text = render_text(target_levels.astype(float) - pool.image_levels)
            out = np.clip(model.forward(pool.image, text).output, 0.0, 1.0)
            psnrs.append(psnr(out, target))
            ssims.append(ssim_value(out, target))
    return float(np.mean(psnrs)), float(np.mean(ssims))


def train(model, train_pools, val_pools, config: TrainConfig,
          checkpoint_path=None, log_path=None) -> TrainResult:
    """Optimize `model` in place; returns per-epoch history.

    Adam with a cosine-annealed learning rate; the image/text encoders
    train at `encoder_lr`, everything else at `head_lr`. When
    `checkpoint_path` is given, the weights with the best validation
    PSNR seen so far are (re)written at the end of each improving epoch.
    The run is bit-reproducible for a fixed seed and config.
    """
    train_pools = list(train_pools)
    if not train_pools:
        raise ValueError("no training pools")
    rng = np.random.default_rng(config.seed)
    groups = model.parameter_groups()
    opt = ad.Adam(
        [(groups["head"], config.head_lr), (groups["encoder"], config.encoder_lr)],
        total_epochs=config.epochs,
    )
    params = model.parameters()
    log_file = open(log_path, "w") if log_path else None
    history: list[dict] = []
    best_psnr = -np.inf
    best_epoch = -1
    try:
        for epoch in range(config.epochs):
            opt.set_epoch(epoch)
            order = rng.permutation(len(train_pools))
            epoch_losses, epoch_mse, epoch_ssim = [], [], []
            for batch_index, start in enumerate(
                range(0, len(order), config.batch_size)
            ):
                chosen = order[start : start + config.batch_size]
                samples = [sample_pair(train_pools[i], rng) for i in chosen]
                samples = [_augment(s, rng, config) for s in samples]
                pixels, targets, bands = _batch_arrays(model, samples)
                with ad.Tape() as tape:
                    out = model.forward_batch(pixels, bands)
                    target_t = ad.Tensor(targets)
                    mse_t = mse_loss(out["output"], target_t)
                    loss = ad.mul(mse_t, config.alpha)
                    if config.beta != 0.0:
                        ssim_l = ssim_loss(out["output"], target_t)
                        loss = ad.add(loss, ad.mul(ssim_l, config.beta))
                    else:
                        ssim_l = None
                    loss_value = float(loss.data)
                    if not np.isfinite(loss_value):
                        raise ad.GradientError(
                            f"non-finite loss at epoch {epoch}, batch {batch_index}"
                        )
                    for p in params:
                        p.zero_grad()
                    tape.backward(loss)
                opt.step()
                epoch_losses.append(loss_value)
                epoch_mse.append(float(mse_t.data))
                epoch_ssim.append(float(ssim_l.data) if ssim_l is not None else 0.0)

            val_psnr, val_ssim = validation_scores(model, val_pools)
            entry = {
                "epoch": epoch,
                "loss": float(np.mean(epoch_losses)),
                "mse": float(np.mean(epoch_mse)),
                "ssim_loss": float(np.mean(epoch_ssim)),
                "val_psnr": val_psnr,
                "val_ssim": val_ssim,
            }
            history.append(entry)
            if log_file:
                log_file.write(json.dumps(entry, sort_keys=True) + "\n")
                log_file.flush()
            if val_psnr > best_psnr:
                best_psnr = val_psnr
                best_epoch = epoch
                if checkpoint_path:
                    model.save(checkpoint_path)
    finally:
        if log_file:
            log_file.close()
    return TrainResult(
        model=model, history=history, best_epoch=best_epoch, best_val_psnr=best_psnr
    )


def _augment(sample, rng: np.random.Generator, config: TrainConfig):
    """Optional horizontal flip / aligned random crop (both off by default)."""
    x, y, text = sample
    if config.random_flip and rng.random() < 0.5:
        x, y = x[:, ::-1], y[:, ::-1]
    size = config.random_crop_size
    if size and size < min(x.shape[0], x.shape[1]):
        top = int(rng.integers(x.shape[0] - size + 1))
        left = int(rng.integers(x.shape[1] - size + 1))
        x = x[top : top + size, left : left + size]
        y = y[top : top + size, left : left + size]
    return x, y, text
