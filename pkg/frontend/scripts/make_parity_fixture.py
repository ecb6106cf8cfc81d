"""Regenerate the frontend test fixtures from the Python package.

- tests/fixtures/parity.json: 200 slider vectors with their canonical
  sentences. The client keeps its own copy of the template renderer for
  instant preview; this fixture pins it byte-for-byte.
- tests/fixtures/sample.png: a small synthetic photo for the live
  integration tests.

Run from the repository root (needs the retouchkit package installed):

    python3 frontend/scripts/make_parity_fixture.py
"""

import json
from pathlib import Path

import numpy as np

from retouchkit import Image, render_text, save_image
from retouchkit.synth import generate_base

fixtures = Path(__file__).parent.parent / "tests" / "fixtures"
fixtures.mkdir(parents=True, exist_ok=True)

rng = np.random.default_rng(2024)
cases = []
for _ in range(200):
    # exactly the grid the sliders expose: [-4, 4] in steps of 0.5
    delta = rng.integers(-8, 9, size=6) / 2.0
    cases.append({"delta": delta.tolist(), "text": render_text(delta)})

out = fixtures / "parity.json"
out.write_text(json.dumps(cases, indent=1) + "\n")
print(f"wrote {len(cases)} cases to {out}")

sample = fixtures / "sample.png"
save_image(Image.from_array(generate_base(seed=31, count=1, size=16)[0]), sample)
print(f"wrote {sample}")
