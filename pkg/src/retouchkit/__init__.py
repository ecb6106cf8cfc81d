"""Content-adaptive tone-curve retouching steered by attribute text.

The library measures six style attributes of an image, renders the
desired shift as a fixed-template sentence, predicts a bank of
per-channel tone curves from fused image/text features, and blends the
curve outputs with learned per-pixel weight maps.
"""

from .attributes import ATTRIBUTE_NAMES, AttributeVector, attribute_vector, discretize
from .curves import (
    apply_curve,
    bicubic_upsample,
    fuse,
    identity_curve,
    unique_color_count,
)
from .image import Image, load_image, save_image
from .metrics import EvalReport, evaluate, mean_delta_e, psnr, ssim_value
from .model import ModelConfig, RetouchModel, RetouchResult
from .styletext import (
    AtpModel,
    AtpTrainConfig,
    PreferenceDelta,
    TextParseError,
    atp_predict,
    atp_train,
    parse_text,
    preference_delta,
    render_text,
)
from .synth import SynthConfig, build_dataset, default_experts, load_dataset
from .training import TrainConfig, train

__version__ = "0.1.0"

__all__ = [
    "ATTRIBUTE_NAMES",
    "AttributeVector",
    "AtpModel",
    "AtpTrainConfig",
    "EvalReport",
    "Image",
    "ModelConfig",
    "PreferenceDelta",
    "RetouchModel",
    "RetouchResult",
    "SynthConfig",
    "TextParseError",
    "TrainConfig",
    "apply_curve",
    "atp_predict",
    "atp_train",
    "attribute_vector",
    "bicubic_upsample",
    "build_dataset",
    "default_experts",
    "discretize",
    "evaluate",
    "fuse",
    "identity_curve",
    "load_dataset",
    "load_image",
    "mean_delta_e",
    "parse_text",
    "preference_delta",
    "psnr",
    "render_text",
    "save_image",
    "ssim_value",
    "train",
    "unique_color_count",
]
