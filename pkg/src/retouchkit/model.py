"""The retouching network: image/text encoders fused multiplicatively,
a linear head emitting sparse control points for N curve sets, and a
small skip-connected encoder-decoder predicting per-pixel blend weights.

The head starts as an exact no-op (zero weights, identity-ramp bias), so
an untrained model returns its input unchanged; training only ever moves
away from a known-safe starting point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .checkpointing import read_checkpoint, write_checkpoint
from .curves import bicubic_matrix
from .image import Image
from .styletext import parse_text

_ENCODER_IN = (3, 16, 32, 64)
_ENCODER_OUT_HEAD = (16, 32, 64)  # last block width equals feature_dim
_EMBED_ROWS = 30  # 6 attributes x 5 term bands


@dataclass(frozen=True)
class ModelConfig:
    """Architecture knobs; defaults are the full model."""

    n_curves: int = 5
    control_points: int = 64
    curve_length: int = 256
    feature_dim: int = 128
    weight_widths: tuple[int, int, int] = (16, 32, 64)
    use_weight_net: bool = True
    use_text: bool = True

    def __post_init__(self):
        if self.n_curves < 1:
            raise ValueError(f"need at least one curve set, got {self.n_curves}")
        if self.control_points < 4:
            raise ValueError(f"need at least 4 control points, got {self.control_points}")
        if self.curve_length < self.control_points:
            raise ValueError("curve length must be >= control point count")
        if len(self.weight_widths) != 3:
            raise ValueError("weight_widths must list three channel counts")

    def to_dict(self) -> dict:
        return {
            "n_curves": self.n_curves,
            "control_points": self.control_points,
            "curve_length": self.curve_length,
            "feature_dim": self.feature_dim,
            "weight_widths": list(self.weight_widths),
            "use_weight_net": self.use_weight_net,
            "use_text": self.use_text,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(
            n_curves=int(d["n_curves"]),
            control_points=int(d["control_points"]),
            curve_length=int(d["curve_length"]),
            feature_dim=int(d["feature_dim"]),
            weight_widths=tuple(int(w) for w in d["weight_widths"]),
            use_weight_net=bool(d["use_weight_net"]),
            use_text=bool(d["use_text"]),
        )


@dataclass
class RetouchResult:
    """Everything one forward pass produces, as plain arrays.

    output is unclamped float; call `to_image()` for an exportable image.
    """

    output: np.ndarray  # (H, W, 3)
    curves: np.ndarray  # (N, 3, L)
    candidates: np.ndarray  # (N, H, W, 3)
    weights: np.ndarray  # (N, H, W), normalized
    text: str

    def to_image(self) -> Image:
        return Image(np.clip(self.output, 0.0, 1.0))


def _as_pixel_array(img) -> np.ndarray:
    if isinstance(img, Image):
        return img.data
    arr = np.asarray(img, dtype=float)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) pixels, got shape {arr.shape}")
    return arr


class RetouchModel:
    def __init__(self, config: ModelConfig, params: dict[str, ad.Tensor], dtype):
        self.config = config
        self.params = params
        self.dtype = np.dtype(dtype)
        upsample = bicubic_matrix(config.control_points, config.curve_length)
        self._upsample_t = ad.Tensor(upsample.T.astype(self.dtype))

    # -- construction -------------------------------------------------

    @classmethod
    def initialize(cls, config: ModelConfig | None = None, seed: int = 0,
                   dtype=np.float32) -> "RetouchModel":
        config = config or ModelConfig()
        rng = np.random.default_rng(seed)
        params: dict[str, ad.Tensor] = {}

        def add(name, arr):
            params[name] = ad.Tensor(
                np.ascontiguousarray(arr, dtype=dtype), requires_grad=True, name=name
            )

        def conv(name, in_ch, out_ch, k=3):
            std = np.sqrt(2.0 / (in_ch * k * k))
            add(f"{name}.w", rng.normal(0.0, std, (out_ch, in_ch, k, k)))
            add(f"{name}.b", np.zeros(out_ch))

        d = config.feature_dim
        for i, (ci, co) in enumerate(
            zip(_ENCODER_IN, _ENCODER_OUT_HEAD + (d,)), start=1
        ):
            conv(f"img.conv{i}", ci, co)

        if config.use_text:
            add("txt.embed", rng.normal(0.0, 0.3, (_EMBED_ROWS, d)))
            add("txt.proj.w", rng.normal(0.0, np.sqrt(1.0 / d), (d, d)))
            # bias at one: fusion starts close to the image feature and
            # lets the text branch learn its modulation gradually
            add("txt.proj.b", np.ones(d))

        n, p = config.n_curves, config.control_points
        add("head.w", np.zeros((d, 3 * n * p)))
        add("head.b", np.tile(np.linspace(0.0, 1.0, p), 3 * n))

        if config.use_weight_net:
            w1, w2, w3 = config.weight_widths
            conv("unet.enc1", 3, w1)
            conv("unet.enc2", w1, w2)
            conv("unet.enc3", w2, w3)
            conv("unet.mid", w3, w3)
            conv("unet.dec2", w3 + w2, w2)
            conv("unet.dec1", w2 + w1, w1)
            conv("unet.out", w1, n)
        return cls(config, params, dtype)

    def parameters(self) -> list[ad.Tensor]:
        return list(self.params.values())

    def parameter_groups(self) -> dict[str, list[ad.Tensor]]:
        """'encoder' = image + text feature extractors; 'head' = the rest."""
        groups = {"encoder": [], "head": []}
        for name, p in self.params.items():
            key = "encoder" if name.startswith(("img.", "txt.")) else "head"
            groups[key].append(p)
        return groups

    # -- forward pieces ------------------------------------------------

    def _image_features(self, x: ad.Tensor) -> ad.Tensor:
        h = ad.bilinear_resize(x, 64, 64)
        for i in (1, 2, 3, 4):
            h = ad.relu(
                ad.conv2d(
                    h,
                    self.params[f"img.conv{i}.w"],
                    self.params[f"img.conv{i}.b"],
                    stride=2,
                )
            )
        return ad.mean_spatial(h)

    def _text_features(self, bands: np.ndarray, batch: int) -> ad.Tensor:
        if not self.config.use_text:
            return ad.Tensor(np.ones((batch, self.config.feature_dim), dtype=self.dtype))
        rows = np.arange(6) * 5 + (np.asarray(bands, dtype=np.int64) - 1)
        summed = ad.sum_axis(ad.gather_rows(self.params["txt.embed"], rows), axis=1)
        return ad.dense(summed, self.params["txt.proj.w"], self.params["txt.proj.b"])

    def _weight_tensor(self, x: ad.Tensor, batch: int, height: int, width: int) -> ad.Tensor:
        n = self.config.n_curves
        if not self.config.use_weight_net:
            return ad.Tensor(
                np.full((batch, n, height, width), 1.0 / n, dtype=self.dtype)
            )
        logits = self._weight_logits(x, height, width)
        return ad.softmax_channels(logits)

    def _weight_logits(self, x: ad.Tensor, height: int, width: int) -> ad.Tensor:
        pad_h = (-height) % 8
        pad_w = (-width) % 8
        data = x.data
        if pad_h or pad_w:
            mode = "reflect" if pad_h < height and pad_w < width else "edge"
            data = np.pad(data, ((0, 0), (0, 0), (0, pad_h), (0, pad_w)), mode=mode)
        t = ad.Tensor(data)
        prm = self.params
        e1 = ad.relu(ad.conv2d(t, prm["unet.enc1.w"], prm["unet.enc1.b"]))
        e2 = ad.relu(ad.conv2d(e1, prm["unet.enc2.w"], prm["unet.enc2.b"], stride=2))
        e3 = ad.relu(ad.conv2d(e2, prm["unet.enc3.w"], prm["unet.enc3.b"], stride=2))
        mid = ad.relu(ad.conv2d(e3, prm["unet.mid.w"], prm["unet.mid.b"]))
        d2 = ad.relu(
            ad.conv2d(
                ad.concat_channels([ad.upsample2_nearest(mid), e2]),
                prm["unet.dec2.w"],
                prm["unet.dec2.b"],
            )
        )
        d1 = ad.relu(
            ad.conv2d(
                ad.concat_channels([ad.upsample2_nearest(d2), e1]),
                prm["unet.dec1.w"],
                prm["unet.dec1.b"],
            )
        )
        logits = ad.conv2d(d1, prm["unet.out.w"], prm["unet.out.b"])
        if pad_h or pad_w:
            logits = ad.crop_spatial(logits, height, width)
        return logits

    def forward_batch(self, pixels: np.ndarray, bands: np.ndarray) -> dict:
        """Training-path forward on (B, 3, H, W) pixels and (B, 6) bands.

        Returns tensors so a surrounding Tape can differentiate the lot.
        """
        pixels = np.ascontiguousarray(pixels, dtype=self.dtype)
        batch, _, height, width = pixels.shape
        if height < 8 or width < 8:
            raise ValueError(f"image {height}x{width} too small; need 8px sides")
        n, p = self.config.n_curves, self.config.control_points
        x = ad.Tensor(pixels)

        f_img = self._image_features(x)
        f_txt = self._text_features(bands, batch)
        fused = ad.mul(f_img, f_txt)
        points = ad.dense(fused, self.params["head.w"], self.params["head.b"])
        points = ad.reshape(points, (batch, 3 * n, p))
        curves = ad.matmul(points, self._upsample_t)  # (B, 3N, L), set-major rows

        weights = self._weight_tensor(x, batch, height, width)
        candidates = []
        output = None
        for j in range(n):
            curve_j = ad.slice_axis1(curves, 3 * j, 3 * j + 3)
            cand = ad.curve_lookup(curve_j, x)
            term = ad.mul(cand, ad.slice_axis1(weights, j, j + 1))
            output = term if output is None else ad.add(output, term)
            candidates.append(cand)
        return {
            "output": output,
            "curves": curves,
            "weights": weights,
            "candidates": candidates,
            "feature": fused,
        }

    # -- public inference ----------------------------------------------

    def forward(self, img, text: str) -> RetouchResult:
        """Retouch one image according to one attribute sentence."""
        pixels = _as_pixel_array(img)
        bands = np.asarray(parse_text(text), dtype=np.int64)[None]
        out = self.forward_batch(pixels.transpose(2, 0, 1)[None], bands)
        n = self.config.n_curves
        return RetouchResult(
            output=out["output"].data[0].transpose(1, 2, 0).astype(float),
            curves=out["curves"].data[0].reshape(n, 3, -1).astype(float),
            candidates=np.stack(
                [c.data[0].transpose(1, 2, 0).astype(float) for c in out["candidates"]]
            ),
            weights=out["weights"].data[0].astype(float),
            text=text,
        )

    def encode_image(self, img) -> np.ndarray:
        """Pooled image feature vector (feature_dim,)."""
        pixels = _as_pixel_array(img)
        height, width = pixels.shape[:2]
        if height < 8 or width < 8:
            raise ValueError(f"image {height}x{width} too small; need 8px sides")
        x = ad.Tensor(pixels.transpose(2, 0, 1)[None].astype(self.dtype))
        return self._image_features(x).data[0].astype(float)

    def encode_text(self, text: str) -> np.ndarray:
        """Feature vector for a template sentence (all-ones if text is off)."""
        bands = np.asarray(parse_text(text), dtype=np.int64)[None]
        return self._text_features(bands, 1).data[0].astype(float)

    def weight_maps(self, img) -> np.ndarray:
        """Raw blend logits (N, H, W); zeros when the weight net is off."""
        pixels = _as_pixel_array(img)
        height, width = pixels.shape[:2]
        if not self.config.use_weight_net:
            return np.zeros((self.config.n_curves, height, width))
        x = ad.Tensor(pixels.transpose(2, 0, 1)[None].astype(self.dtype))
        return self._weight_logits(x, height, width).data[0].astype(float)

    # -- persistence ----------------------------------------------------

    def save(self, path) -> None:
        write_checkpoint(
            path,
            {"kind": "retouch", "model": self.config.to_dict()},
            {name: t.data for name, t in self.params.items()},
        )

    @classmethod
    def load(cls, path, dtype=np.float32) -> "RetouchModel":
        config_dict, tensors = read_checkpoint(path)
        if config_dict.get("kind") != "retouch":
            raise ValueError(f"{path}: not a retouch-model checkpoint")
        config = ModelConfig.from_dict(config_dict["model"])
        model = cls.initialize(config, seed=0, dtype=dtype)
        if set(tensors) != set(model.params):
            missing = set(model.params) - set(tensors)
            extra = set(tensors) - set(model.params)
            raise ValueError(
                f"{path}: parameter set mismatch (missing {sorted(missing)}, "
                f"unexpected {sorted(extra)})"
            )
        for name, arr in tensors.items():
            expected = model.params[name].data.shape
            if tuple(arr.shape) != expected:
                raise ValueError(
                    f"{path}: tensor {name!r} has shape {arr.shape}, expected {expected}"
                )
            model.params[name].data = arr.astype(dtype)
        return model
