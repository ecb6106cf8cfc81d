"""Command-line entry points.

Every subcommand exits 0 on success. Expected failures (bad files, bad
flags, missing artifacts) print a single ``error: <reason>`` line to
stderr and exit 1, so scripts can grep the prefix instead of parsing
tracebacks.
"""

from __future__ import annotations

import dataclasses
import functools
import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from .attributes import ATTRIBUTE_NAMES, attribute_vector
from .autodiff import GradientError
from .checkpointing import CheckpointError
from .curves import quantize_weight_maps, unique_color_count
from .gradcheck import DEFAULT_RTOL, DEFAULT_SAMPLES, DEFAULT_STEP, run_suite
from .image import ImageIOError, encode_gray_png, load_image, save_image
from .metrics import evaluate
from .model import ModelConfig, RetouchModel
from .styletext import (
    AtpModel,
    AtpTrainConfig,
    TextParseError,
    atp_mse,
    atp_predict,
    atp_train,
    preference_delta,
    render_text,
)
from .synth import SynthConfig, build_dataset, load_dataset
from .training import TrainConfig, train

_EXPECTED = (
    ImageIOError,
    CheckpointError,
    TextParseError,
    GradientError,
    FileNotFoundError,
    NotADirectoryError,
    IsADirectoryError,
    PermissionError,
    ValueError,
    KeyError,
    json.JSONDecodeError,
)


def _fail(message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


def _guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except _EXPECTED as exc:
            _fail(str(exc))

    return wrapper


def _echo_json(payload: dict) -> None:
    click.echo(json.dumps(payload, sort_keys=True))


def _parse_delta(text: str) -> np.ndarray:
    parts = text.split(",")
    if len(parts) != 6:
        raise ValueError(f"--delta needs 6 comma-separated values, got {len(parts)}")
    try:
        delta = np.asarray([float(p) for p in parts], dtype=float)
    except ValueError:
        raise ValueError(f"--delta must be numeric, got {text!r}") from None
    if np.any(np.abs(delta) > 4.0):
        raise ValueError("each --delta component must lie in [-4, 4]")
    return delta


def _parse_widths(text: str) -> tuple[int, ...]:
    try:
        widths = tuple(int(p) for p in text.split(","))
    except ValueError:
        raise ValueError(f"--weight-widths must be comma-separated ints, got {text!r}") from None
    return widths


@click.group()
def main():
    """Attribute-guided curve retouching toolkit."""


@main.command("gen-data")
@click.option("--seed", type=int, default=7, show_default=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--count", type=int, default=64, show_default=True)
@click.option("--size", type=int, default=64, show_default=True)
@_guarded
def gen_data_cmd(seed: int, out_dir: str, count: int, size: int):
    """Write the synthetic multi-expert dataset (PNG tree + manifest)."""
    holdout = max(1, count // 8)
    config = SynthConfig(
        count=count, size=size,
        train=count - 2 * holdout, val=holdout, test=holdout,
    )
    dataset = build_dataset(seed=seed, config=config, out_dir=out_dir)
    _echo_json({
        "out": str(out_dir),
        "count": config.count,
        "size": config.size,
        "experts": list(dataset.experts),
        "splits": {k: len(v) for k, v in dataset.splits.items()},
    })


@main.command("attrs")
@click.argument("image", type=click.Path())
@_guarded
def attrs_cmd(image: str):
    """Print the six raw attribute values and their levels for IMAGE."""
    vec = attribute_vector(load_image(image))
    _echo_json({
        name: {"raw": float(r), "level": int(l)}
        for name, r, l in zip(ATTRIBUTE_NAMES, vec.raw, vec.levels)
    })


@main.command("train-atp")
@click.option("--data", "data_dir", type=click.Path(), required=True)
@click.option("--expert", required=True, help="Expert style the predictor should imitate.")
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--split", default="train", show_default=True)
@click.option("--steps", type=int, default=1500, show_default=True)
@click.option("--lr", type=float, default=1e-2, show_default=True)
@click.option("--hidden", type=int, default=32, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@_guarded
def train_atp_cmd(data_dir, expert, out_path, split, steps, lr, hidden, seed):
    """Fit the target-level predictor to one expert's (input, target) levels."""
    dataset = load_dataset(data_dir)
    if expert not in dataset.experts:
        raise ValueError(
            f"unknown expert {expert!r}; dataset has {sorted(dataset.experts)}"
        )
    pools = dataset.pools(split)
    expert_pos = list(dataset.experts).index(expert)
    pairs = [
        (pool.image_levels.astype(float), pool.version_levels[expert_pos].astype(float))
        for pool in pools
    ]
    model = atp_train(pairs, AtpTrainConfig(steps=steps, learning_rate=lr,
                                            hidden=hidden, seed=seed))
    model.save(out_path)
    _echo_json({
        "checkpoint": str(out_path),
        "expert": expert,
        "pairs": len(pairs),
        "train_mse": atp_mse(model, pairs),
    })


@main.command("train")
@click.option("--data", "data_dir", type=click.Path(), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--log", "log_path", type=click.Path(), default=None,
              help="Per-epoch JSONL log (default: <out>.log.jsonl).")
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="key=value training settings file.")
@click.option("--epochs", type=int, default=None)
@click.option("--batch-size", type=int, default=None)
@click.option("--head-lr", type=float, default=None)
@click.option("--encoder-lr", type=float, default=None)
@click.option("--alpha", type=float, default=None)
@click.option("--beta", type=float, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--n-curves", type=int, default=5, show_default=True)
@click.option("--control-points", type=int, default=64, show_default=True)
@click.option("--curve-length", type=int, default=256, show_default=True)
@click.option("--feature-dim", type=int, default=128, show_default=True)
@click.option("--weight-widths", default="16,32,64", show_default=True)
@click.option("--no-weight-net", is_flag=True, help="Blend candidates uniformly.")
@click.option("--no-text", is_flag=True, help="Ignore the attribute sentence.")
@click.option("--model-seed", type=int, default=0, show_default=True)
@_guarded
def train_cmd(data_dir, out_path, log_path, config_path, epochs, batch_size,
              head_lr, encoder_lr, alpha, beta, seed, n_curves, control_points,
              curve_length, feature_dim, weight_widths, no_weight_net, no_text,
              model_seed):
    """Train the retouching model on a generated dataset."""
    config = TrainConfig.from_file(config_path) if config_path else TrainConfig()
    overrides = {
        "epochs": epochs, "batch_size": batch_size, "head_lr": head_lr,
        "encoder_lr": encoder_lr, "alpha": alpha, "beta": beta, "seed": seed,
    }
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if overrides:
        config = dataclasses.replace(config, **overrides)
    model_config = ModelConfig(
        n_curves=n_curves,
        control_points=control_points,
        curve_length=curve_length,
        feature_dim=feature_dim,
        weight_widths=_parse_widths(weight_widths),
        use_weight_net=not no_weight_net,
        use_text=not no_text,
    )
    dataset = load_dataset(data_dir)
    model = RetouchModel.initialize(model_config, seed=model_seed)
    log_path = log_path or f"{out_path}.log.jsonl"
    result = train(
        model,
        dataset.pools("train"),
        dataset.pools("val"),
        config,
        checkpoint_path=out_path,
        log_path=log_path,
    )
    if not os.path.exists(out_path):  # no validation pool ever scored
        model.save(out_path)
    _echo_json({
        "checkpoint": str(out_path),
        "log": str(log_path),
        "epochs": config.epochs,
        "best_epoch": result.best_epoch,
        "best_val_psnr": result.best_val_psnr,
    })


@main.command("retouch")
@click.option("--model", "model_path", type=click.Path(), required=True)
@click.option("--image", "image_path", type=click.Path(), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--delta", default=None, help="Six comma-separated level shifts in [-4, 4].")
@click.option("--auto", is_flag=True, help="Predict the shift with a trained predictor.")
@click.option("--atp", "atp_path", type=click.Path(), default=None,
              help="Predictor checkpoint for --auto.")
@click.option("--weights-dir", type=click.Path(), default=None,
              help="Also write the per-candidate blend maps as grayscale PNGs.")
@_guarded
def retouch_cmd(model_path, image_path, out_path, delta, auto, atp_path, weights_dir):
    """Apply the model to IMAGE and write the retouched PNG."""
    if auto == (delta is not None):
        raise ValueError("choose exactly one of --delta or --auto")
    model = RetouchModel.load(model_path)
    img = load_image(image_path)
    if auto:
        if not atp_path:
            raise ValueError("--auto needs an attribute-predictor checkpoint (--atp)")
        predictor = AtpModel.load(atp_path)
        levels = attribute_vector(img).levels
        text = preference_delta(atp_predict(predictor, levels), levels).text
    else:
        text = render_text(_parse_delta(delta))
    result = model.forward(img, text)
    save_image(result.to_image(), out_path)
    if weights_dir is not None:
        Path(weights_dir).mkdir(parents=True, exist_ok=True)
        planes = quantize_weight_maps(result.weights)
        for k, plane in enumerate(planes):
            Path(weights_dir, f"weight_{k}.png").write_bytes(encode_gray_png(plane))
    click.echo(result.text)


@main.command("eval")
@click.option("--model", "model_path", type=click.Path(), required=True)
@click.option("--data", "data_dir", type=click.Path(), required=True)
@click.option("--split", default="test", show_default=True)
@_guarded
def eval_cmd(model_path, data_dir, split):
    """Score the model on a dataset split (PSNR / SSIM / color difference)."""
    model = RetouchModel.load(model_path)
    dataset = load_dataset(data_dir)
    report = evaluate(model, dataset.eval_pairs(split))
    _echo_json(report.to_dict())


@main.command("color-count")
@click.argument("image", type=click.Path())
@_guarded
def color_count_cmd(image: str):
    """Print the number of distinct 8-bit RGB colors in IMAGE."""
    click.echo(unique_color_count(load_image(image)))


@main.command("grad-check")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--samples", type=int, default=DEFAULT_SAMPLES, show_default=True)
@click.option("--step", type=float, default=DEFAULT_STEP, show_default=True)
@click.option("--rtol", type=float, default=DEFAULT_RTOL, show_default=True)
@_guarded
def grad_check_cmd(seed, samples, step, rtol):
    """Compare every operator's gradients against finite differences."""
    results = run_suite(seed=seed, samples=samples, step=step, rtol=rtol)
    for result in results:
        click.echo(str(result))
    failed = [r.name for r in results if not r.passed]
    if failed:
        _fail(f"{len(failed)} gradient check(s) failed: {', '.join(failed)}")


@main.command("predict-style")
@click.option("--model", "model_path", type=click.Path(), required=True)
@click.option("--image", "image_path", type=click.Path(), required=True)
@_guarded
def predict_style_cmd(model_path, image_path):
    """Print current levels, predicted target levels, shift, and sentence."""
    predictor = AtpModel.load(model_path)
    current = attribute_vector(load_image(image_path)).levels
    predicted = atp_predict(predictor, current)
    shift = preference_delta(predicted, current)
    _echo_json({
        "s_x": [int(v) for v in current],
        "s_y_hat": [float(v) for v in predicted],
        "delta": [float(v) for v in shift.delta],
        "text": shift.text,
    })


@main.command("serve")
@click.option("--model", "model_path", type=click.Path(), required=True)
@click.option("--atp", "atp_path", type=click.Path(), default=None)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=None,
              help="Default: $RETOUCHKIT_PORT or 8000.")
@click.option("--max-image-bytes", type=int, default=8_000_000, show_default=True)
@_guarded
def serve_cmd(model_path, atp_path, host, port, max_image_bytes):
    """Serve the retouching model over HTTP."""
    import uvicorn

    from .server import create_app

    if port is None:
        port = int(os.environ.get("RETOUCHKIT_PORT", "8000"))
    model = RetouchModel.load(model_path)
    predictor = AtpModel.load(atp_path) if atp_path else None
    app = create_app(model, predictor, max_image_bytes=max_image_bytes)
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
