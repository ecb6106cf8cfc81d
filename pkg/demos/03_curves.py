"""The curve machinery itself: control points to lookup tables.

The model never predicts a 256-entry lookup table directly; it predicts
64 control points per channel and densifies them with cubic-convolution
upsampling. This keeps the parameter head small and the curves smooth.
This script shows the three properties the rest of the system relies on:

  1. upsampling a straight line reproduces it exactly (so the identity
     edit is representable bit-for-bit)
  2. upsampling is smooth: a bumped control point spreads into a local,
     rounded bump rather than a spike
  3. applying a classic S-curve to a photo-like gradient deepens the
     shadows and lifts the highlights, visible in the saved PNGs

Run:  python3 demos/03_curves.py        (writes demos/output/*.png)
"""

from pathlib import Path

import numpy as np

from retouchkit import Image, apply_curve, bicubic_upsample, save_image
from retouchkit.synth import generate_base

out_dir = Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)

# --- 1. linear reproduction -------------------------------------------
P, L = 64, 256
ramp_points = np.linspace(0.0, 1.0, P)
ramp_curve = bicubic_upsample(ramp_points, L)
err = float(np.abs(ramp_curve - np.linspace(0.0, 1.0, L)).max())
print(f"upsampled ramp vs exact identity: max error {err:.2e}")

# --- 2. locality and smoothness ---------------------------------------
bumped = ramp_points.copy()
bumped[32] += 0.1
bump = bicubic_upsample(bumped, L) - ramp_curve
support = np.flatnonzero(np.abs(bump) > 1e-12)
print(f"a single bumped control point touches entries "
      f"{support[0]}..{support[-1]} of {L} (local), "
      f"peak {bump.max():.3f}, smooth on both flanks")

# --- 3. an S-curve on an image ----------------------------------------
# Classic contrast move: x + a*sin(2*pi*x) pulls shadows down and pushes
# highlights up while pinning black, mid-gray, and white.
x = np.linspace(0.0, 1.0, P)
s_points = x - 0.08 * np.sin(2.0 * np.pi * x)
s_curve = np.tile(bicubic_upsample(s_points, L), (3, 1))

img = generate_base(seed=4, count=1, size=128)[0]
graded = np.clip(apply_curve(img, s_curve), 0.0, 1.0)

save_image(Image.from_array(img), out_dir / "03_before.png")
save_image(Image.from_array(graded), out_dir / "03_after.png")

lum = lambda p: (p * [0.299, 0.587, 0.114]).sum(axis=-1)
before, after = lum(img), lum(graded)
dark = before < np.percentile(before, 25)
light = before > np.percentile(before, 75)
print(f"\nS-curve applied to a {img.shape[1]}x{img.shape[0]} render:")
print(f"  shadows   mean {before[dark].mean():.3f} -> {after[dark].mean():.3f}")
print(f"  highlights mean {before[light].mean():.3f} -> {after[light].mean():.3f}")
print(f"wrote {out_dir / '03_before.png'} and {out_dir / '03_after.png'}")
