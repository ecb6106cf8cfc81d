"""From pixels to a sentence and back, plus learned style targets.

The pipeline describes an edit as a shift across six measurable style
attributes. This script walks the full text loop:

  1. measure the six attributes of an image and discretize to levels 1-5
  2. pick a target style, render the shift as the fixed-template sentence
  3. parse the sentence back and confirm nothing was lost
  4. train the style-target predictor on a toy preference rule and let
     it propose the edit on its own

Run:  python3 demos/02_attribute_text.py
"""

import numpy as np

from retouchkit import (
    ATTRIBUTE_NAMES,
    AtpTrainConfig,
    atp_predict,
    atp_train,
    attribute_vector,
    parse_text,
    preference_delta,
    render_text,
)
from retouchkit.synth import generate_base

# --- 1. measure ----------------------------------------------------------
img = generate_base(seed=11, count=1, size=64)[0]
vec = attribute_vector(img)
print("measured attributes:")
for name, raw, level in zip(ATTRIBUTE_NAMES, vec.raw, vec.levels):
    print(f"  {name:16s} raw={raw:.3f}  level={level}")

# --- 2. render the desired shift ----------------------------------------
target = np.array([5, 4, 3, 3, 2, 4])  # a brighter, warmer, tamer look
delta = preference_delta(target, vec.levels)
print(f"\ncurrent levels : {[int(v) for v in vec.levels]}")
print(f"target levels  : {[int(v) for v in target]}")
print(f"rendered text  : {delta.text}")

# --- 3. round trip -------------------------------------------------------
# Sentences carry five bands per slot; band 1 is the strongest push up
# and band 5 the strongest push down, so band = 3 - clip(delta, -2, 2).
bands = parse_text(delta.text)
print(f"parsed back    : {list(bands)}")
assert list(bands) == list(3 - np.clip(target - vec.levels, -2, 2)), \
    "parse must invert render on banded deltas"
print("render -> parse round trip: exact")

# --- 4. learn a preference ----------------------------------------------
# Toy retoucher: always pushes brightness and contrast up one level,
# everything else stays. The predictor learns the rule from examples.
rng = np.random.default_rng(0)
pairs = []
for _ in range(300):
    s_x = rng.integers(1, 6, size=6)
    s_y = s_x.copy()
    s_y[0] = min(s_x[0] + 1, 5)
    s_y[5] = min(s_x[5] + 1, 5)
    pairs.append((s_x, s_y))

model = atp_train(pairs, AtpTrainConfig(steps=800, seed=0))
probe = np.array([3, 2, 4, 1, 5, 3])
predicted = atp_predict(model, probe)
print(f"\npredictor input levels : {[int(v) for v in probe]}")
print(f"predicted target       : {[round(float(v), 2) for v in predicted]}")
auto = preference_delta(predicted, probe)
print(f"auto-proposed edit     : {auto.text}")
