"""Style direction as text: term bands, the fixed sentence template, and
the small MLP that predicts a user's preferred attribute levels.

Each of the six attributes has five descriptive terms ordered from the
strongest increase to the strongest decrease. A signed level shift picks
the term through fixed bands:

    band 1: shift >= 1.5          band 4: -1.5 <= shift < -0.5
    band 2: 0.5 <= shift < 1.5    band 5: shift < -1.5
    band 3: -0.5 <= shift < 0.5

The sentence template is a closed grammar — rendering is byte-exact and
parsing recovers the band indices, so text can act as a lossless wire
format between the predictor, the retouching network, and a UI.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .attributes import ATTRIBUTE_NAMES
from .checkpointing import read_checkpoint, write_checkpoint

#: Per-attribute terms, band 1 (strong increase) through band 5 (strong decrease).
TERMS: tuple[tuple[str, ...], ...] = (
    ("very high", "high", "medium", "low", "very low"),
    ("intensely vibrant", "vibrant", "natural", "muted", "desaturated"),
    ("extreme", "high", "moderate", "low", "minimal"),
    ("dramatic", "dynamic", "balanced", "soft", "flat"),
    ("full-spectrum", "rich", "standard", "limited", "monochromatic"),
    ("very high", "high", "medium", "low", "very low"),
)

TEMPLATE = (
    "Set the brightness to {}, make the colors {}, adjust color variation "
    "to be {}, set the lighting to be {}, use a {} color palette, "
    "make the contrast {}."
)

# The literal scaffolding between slots, used by the parser.
_LEADS = (
    "Set the brightness to ",
    ", make the colors ",
    ", adjust color variation to be ",
    ", set the lighting to be ",
    ", use a ",
    " color palette, make the contrast ",
)
_TAIL = "."


class TextParseError(ValueError):
    """Raised when a sentence does not match the template grammar."""


def delta_to_band(delta: float) -> int:
    """Map a signed level shift to its term band (1..5)."""
    if delta >= 1.5:
        return 1
    if delta >= 0.5:
        return 2
    if delta >= -0.5:
        return 3
    if delta >= -1.5:
        return 4
    return 5


def delta_to_term(attribute_index: int, delta: float) -> str:
    """Descriptive term for shifting attribute `attribute_index` by `delta`."""
    if not 0 <= attribute_index < len(TERMS):
        raise IndexError(f"attribute index {attribute_index} out of range 0..5")
    return TERMS[attribute_index][delta_to_band(delta) - 1]


def render_from_bands(bands) -> str:
    """Fill the template from six band indices (each 1..5)."""
    bands = tuple(int(b) for b in bands)
    if len(bands) != 6 or any(not 1 <= b <= 5 for b in bands):
        raise ValueError(f"need six band indices in 1..5, got {bands!r}")
    return TEMPLATE.format(*(TERMS[i][b - 1] for i, b in enumerate(bands)))


def render_text(delta) -> str:
    """Render the attribute sentence for a six-component level shift."""
    delta = tuple(float(d) for d in delta)
    if len(delta) != 6:
        raise ValueError(f"need six delta components, got {len(delta)}")
    return render_from_bands([delta_to_band(d) for d in delta])


def parse_text(text: str) -> tuple[int, ...]:
    """Recover the six band indices from a rendered sentence.

    Raises TextParseError naming the first slot that fails to match.
    """
    pos = 0
    bands = []
    for i, lead in enumerate(_LEADS):
        slot = f"slot {i + 1} ({ATTRIBUTE_NAMES[i]})"
        if not text.startswith(lead, pos):
            raise TextParseError(f"{slot}: expected {lead!r} at offset {pos}")
        pos += len(lead)
        stop_mark = _LEADS[i + 1] if i + 1 < len(_LEADS) else _TAIL
        end = text.find(stop_mark, pos)
        if end < 0:
            raise TextParseError(f"{slot}: missing {stop_mark!r} after offset {pos}")
        term = text[pos:end]
        if term not in TERMS[i]:
            raise TextParseError(f"{slot}: unknown term {term!r}")
        bands.append(TERMS[i].index(term) + 1)
        pos = end
    if text[pos:] != _TAIL:
        raise TextParseError(f"trailing content {text[pos:]!r} after slot 6")
    return tuple(bands)


@dataclass(frozen=True)
class PreferenceDelta:
    """A desired style shift: signed levels, their terms, and the sentence."""

    delta: tuple[float, ...]
    terms: tuple[str, ...]
    text: str

    def __post_init__(self):
        if len(self.delta) != 6 or len(self.terms) != 6:
            raise ValueError("PreferenceDelta needs six components")


def preference_delta(predicted_levels, current_levels) -> PreferenceDelta:
    """Difference of target and current levels, with terms and sentence."""
    predicted = np.asarray(predicted_levels, dtype=float)
    current = np.asarray(current_levels, dtype=float)
    if predicted.shape != (6,) or current.shape != (6,):
        raise ValueError("levels must be six-component vectors")
    delta = predicted - current
    if np.any(np.abs(delta) > 4.0 + 1e-9):
        raise ValueError(f"level shift out of [-4, 4]: {delta}")
    terms = tuple(delta_to_term(i, d) for i, d in enumerate(delta))
    return PreferenceDelta(
        delta=tuple(float(d) for d in delta), terms=terms, text=TEMPLATE.format(*terms)
    )


# ---------------------------------------------------------------------------
# attribute-level preference predictor


class AtpModel:
    """Two-hidden-layer MLP (6 -> hidden -> hidden -> 6) over level vectors.

    Inputs are centered to roughly [-1, 1] before the first layer; the
    raw linear output is clamped to [1, 5] only at prediction time so
    training gradients stay alive at the range edges.
    """

    def __init__(self, params: dict[str, ad.Tensor], hidden: int):
        self.params = params
        self.hidden = hidden

    @classmethod
    def initialize(cls, seed: int = 0, hidden: int = 32) -> "AtpModel":
        rng = np.random.default_rng(seed)

        def glorot(rows, cols):
            scale = np.sqrt(2.0 / rows)
            return rng.normal(0.0, scale, size=(rows, cols))

        params = {
            "w1": ad.Tensor(glorot(6, hidden), requires_grad=True, name="atp.w1"),
            "b1": ad.Tensor(np.zeros(hidden), requires_grad=True, name="atp.b1"),
            "w2": ad.Tensor(glorot(hidden, hidden), requires_grad=True, name="atp.w2"),
            "b2": ad.Tensor(np.zeros(hidden), requires_grad=True, name="atp.b2"),
            "w3": ad.Tensor(glorot(hidden, 6), requires_grad=True, name="atp.w3"),
            "b3": ad.Tensor(np.zeros(6), requires_grad=True, name="atp.b3"),
        }
        return cls(params, hidden)

    def parameters(self) -> list[ad.Tensor]:
        return list(self.params.values())

    def forward(self, levels: np.ndarray) -> ad.Tensor:
        """Unclamped network output for a (batch, 6) array of levels."""
        x = ad.Tensor((np.asarray(levels, dtype=float) - 3.0) / 2.0)
        h = ad.relu(ad.dense(x, self.params["w1"], self.params["b1"]))
        h = ad.relu(ad.dense(h, self.params["w2"], self.params["b2"]))
        return ad.dense(h, self.params["w3"], self.params["b3"])

    def save(self, path) -> None:
        config = {"kind": "atp", "hidden": self.hidden}
        write_checkpoint(path, config, {k: v.data for k, v in self.params.items()})

    @classmethod
    def load(cls, path) -> "AtpModel":
        config, tensors = read_checkpoint(path)
        if config.get("kind") != "atp":
            raise ValueError(f"{path}: not an attribute-predictor checkpoint")
        params = {
            name: ad.Tensor(arr.astype(float), requires_grad=True, name=f"atp.{name}")
            for name, arr in tensors.items()
        }
        return cls(params, int(config.get("hidden", params["b1"].data.shape[0])))


def atp_predict(model: AtpModel, levels) -> np.ndarray:
    """Predicted target levels for one input vector, clamped to [1, 5]."""
    levels = np.asarray(levels, dtype=float).reshape(1, 6)
    raw = model.forward(levels).data[0]
    return np.clip(raw, 1.0, 5.0)


@dataclass(frozen=True)
class AtpTrainConfig:
    steps: int = 1500
    learning_rate: float = 1e-2
    hidden: int = 32
    seed: int = 0


def atp_train(pairs, config: AtpTrainConfig = AtpTrainConfig()) -> AtpModel:
    """Fit the predictor to (input levels, target levels) pairs.

    Full-batch Adam on mean squared error; deterministic for a fixed
    config. Returns the trained model.
    """
    if len(pairs) == 0:
        raise ValueError("cannot train on an empty dataset")
    inputs = np.asarray([p[0] for p in pairs], dtype=float).reshape(-1, 6)
    targets = np.asarray([p[1] for p in pairs], dtype=float).reshape(-1, 6)

    model = AtpModel.initialize(seed=config.seed, hidden=config.hidden)
    opt = ad.Adam([(model.parameters(), config.learning_rate)])
    for _ in range(config.steps):
        with ad.Tape() as tape:
            pred = model.forward(inputs)
            err = ad.sub(pred, ad.Tensor(targets))
            loss = ad.mean_all(ad.mul(err, err))
            for p in model.parameters():
                p.zero_grad()
            tape.backward(loss)
        opt.step()
    return model


def atp_mse(model: AtpModel, pairs) -> float:
    """Mean squared error of the unclamped network over `pairs`."""
    inputs = np.asarray([p[0] for p in pairs], dtype=float).reshape(-1, 6)
    targets = np.asarray([p[1] for p in pairs], dtype=float).reshape(-1, 6)
    pred = model.forward(inputs).data
    return float(np.mean((pred - targets) ** 2))
