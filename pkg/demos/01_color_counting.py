"""Why one global tone curve cannot do regional edits.

A lookup table sends every pixel with the same RGB value to the same
output value, no matter where it sits in the frame. So if a retoucher
brightened the sky but darkened the foreground, and both regions share
a color, no single curve can reproduce the edit: it either merges
colors that should stay apart or moves both regions together.

This script builds the smallest image that demonstrates the conflict,
then shows that blending two curves with per-pixel weights resolves it.

Run:  python3 demos/01_color_counting.py
"""

import numpy as np

from retouchkit import apply_curve, fuse, identity_curve, unique_color_count

# Both halves are the exact same mid gray (an exact 8-bit level, so
# curve lookups land on a table entry instead of interpolating), but
# the desired edit brightens the top and darkens the bottom.
v = 128 / 255
img = np.full((4, 4, 3), v)

target = img.copy()
target[:2] = 0.8  # sky pushed up
target[2:] = 0.2  # foreground pulled down

print(f"input: one flat gray, {unique_color_count(img)} distinct color")

# --- attempt 1: one global curve fitted to "do both at once" ----------
# The best a single curve can do with the shared gray is pick ONE
# output for it; here we split the difference.
curve = np.tile(identity_curve(256), (3, 1))
curve[:, 128] = 0.5
one_curve = apply_curve(img, curve)
print(f"\nglobal curve: sky -> {one_curve[0, 0, 0]:.2f}, "
      f"foreground -> {one_curve[3, 0, 0]:.2f}  (identical, by construction)")
err = float(np.abs(one_curve - target).max())
print(f"global curve max error vs the regional edit: {err:.2f}")

# --- attempt 2: two curves + spatial weights --------------------------
bright = np.tile(identity_curve(256), (3, 1))
bright[:, 128] = 0.8
dark = np.tile(identity_curve(256), (3, 1))
dark[:, 128] = 0.2
candidates = np.stack([apply_curve(img, bright), apply_curve(img, dark)])

weights = np.zeros((2, 4, 4))
weights[0, :2] = 1.0  # sky uses the brightening curve
weights[1, 2:] = 1.0  # foreground uses the darkening curve
blended = fuse(candidates, weights)

print(f"\ntwo weighted curves: sky -> {blended[0, 0, 0]:.2f}, "
      f"foreground -> {blended[3, 0, 0]:.2f}  (now independent)")
err = float(np.abs(blended - target).max())
print(f"blended max error vs the regional edit: {err:.2e}")

# --- the counting invariant -------------------------------------------
# A curve is a function of pixel value alone, so it can never INCREASE
# the number of distinct colors in an image. Spatial blending can.
print(f"\ncolor counts: input={unique_color_count(img)}, "
      f"global curve={unique_color_count(one_curve)}, "
      f"blended={unique_color_count(np.clip(blended, 0, 1))}")
assert unique_color_count(one_curve) <= unique_color_count(img)
assert unique_color_count(np.clip(blended, 0, 1)) > unique_color_count(img)
print("a global curve can only merge colors; spatial blending can mint them")
