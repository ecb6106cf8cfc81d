"""End-to-end: generate data, train, evaluate, retouch.

A compressed version of the full workflow on a small synthetic dataset.
Three procedural retouchers label every image: "warm" and "cool" are
global looks, while "split" treats bright and dark pixels differently —
the case that forces the model to use its spatial weight maps.

Takes about a minute on a laptop CPU. For the full-scale run (64 images
at 64 px, 100 epochs) use the command line:

  retouchkit gen-data --seed 7 --out data/ --count 64 --size 64
  retouchkit train --data data/ --out model.ckpt --epochs 100

Run:  python3 demos/04_train_synthetic.py   (writes demos/output/*.png)
"""

from pathlib import Path

import numpy as np

from retouchkit import (
    Image,
    ModelConfig,
    RetouchModel,
    SynthConfig,
    TrainConfig,
    build_dataset,
    evaluate,
    save_image,
    train,
)
from retouchkit.curves import quantize_weight_maps
from retouchkit.image import encode_gray_png

out_dir = Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)

# --- data ---------------------------------------------------------------
config = SynthConfig(count=16, size=32, train=12, val=2, test=2)
ds = build_dataset(seed=7, config=config)
print(f"dataset: {config.count} images at {config.size}px, "
      f"experts {list(ds.experts)}, splits 12/2/2")

# --- train ----------------------------------------------------------------
model = RetouchModel.initialize(ModelConfig(n_curves=3, feature_dim=64), seed=0)
result = train(
    model,
    ds.pools("train"),
    ds.pools("val"),
    TrainConfig(epochs=40, batch_size=4, seed=0, n_sweep=()),
)
print(f"trained 40 epochs; best validation PSNR "
      f"{result.best_val_psnr:.2f} dB at epoch {result.best_epoch}")

# --- evaluate -------------------------------------------------------------
report = evaluate(result.model, ds.eval_pairs("test"))
print(f"held-out: PSNR {report.psnr:.2f} dB, SSIM {report.ssim:.3f}, "
      f"mean color difference {report.delta_e:.2f} over {report.pairs} pairs")

# --- retouch one image ------------------------------------------------
x, y, text = ds.eval_pairs("test")[-1]
res = result.model.forward(x, text)
save_image(Image.from_array(x), out_dir / "04_input.png")
save_image(res.to_image(), out_dir / "04_output.png")
save_image(Image.from_array(y), out_dir / "04_target.png")
for k, plane in enumerate(quantize_weight_maps(res.weights)):
    (out_dir / f"04_weight_{k}.png").write_bytes(encode_gray_png(plane))

print(f'\nrequest: "{text}"')
spread = res.weights.max(axis=0) - res.weights.min(axis=0)
print(f"weight maps disagree by up to {spread.max():.2f} across the frame "
      f"(0 would mean a single global curve)")
print(f"wrote input/output/target and {res.weights.shape[0]} weight maps "
      f"to {out_dir}")
