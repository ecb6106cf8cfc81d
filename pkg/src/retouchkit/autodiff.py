"""Minimal reverse-mode automatic differentiation kit.

A Tensor wraps a numpy array; while a Tape is active, every op records
the node with links to its parents and a closure that routes the output
gradient back to them. `Tape.backward` walks the recorded nodes in
reverse creation order (a valid reverse topological order, since parents
are always created first), visiting each node exactly once.

No operator fusion, no graph rewriting: correctness and bit-level
determinism over speed. Convolutions use reflection padding.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np


class GradientError(RuntimeError):
    """Raised when gradients are unusable (NaN/Inf) or misused."""


class Tensor:
    """Array value with an optional gradient buffer of the same shape."""

    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, name: str = ""):
        self.data = np.asarray(data)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.name = name
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[np.ndarray], None] | None = None

    @property
    def shape(self):
        return self.data.shape

    def zero_grad(self):
        self.grad = np.zeros_like(self.data)

    def _accumulate(self, grad: np.ndarray):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += grad

    def __repr__(self):
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.data.shape}, grad={self.requires_grad}{label})"


_TAPE_STACK: list["Tape"] = []


class Tape:
    """Records op nodes in execution order for one forward pass."""

    def __init__(self):
        self.nodes: list[Tensor] = []

    def __enter__(self):
        _TAPE_STACK.append(self)
        return self

    def __exit__(self, *exc):
        _TAPE_STACK.pop()
        return False

    def backward(self, loss: Tensor):
        """Seed d(loss)/d(loss)=1 and push gradients to every parent."""
        if loss.data.size != 1:
            raise GradientError("backward expects a scalar loss")
        if loss._backward is None or not any(node is loss for node in self.nodes):
            raise GradientError("loss was not computed under this tape")
        loss.grad = np.ones_like(loss.data)
        for node in reversed(self.nodes):
            if node.grad is not None and node._backward is not None:
                node._backward(node.grad)


def _current_tape() -> Tape | None:
    return _TAPE_STACK[-1] if _TAPE_STACK else None


def _as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(np.asarray(value))


def _record(
    data: np.ndarray, parents: Sequence[Tensor], backward: Callable[[np.ndarray], None]
) -> Tensor:
    """Create the output node; attach to the active tape when grads flow."""
    out = Tensor(data)
    tape = _current_tape()
    if tape is not None and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
        tape.nodes.append(out)
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a gradient down to the shape it was broadcast from."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# ---------------------------------------------------------------------------
# elementwise and linear ops


def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out_data = a.data + b.data

    def backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g, a.data.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g, b.data.shape))

    return _record(out_data, (a, b), backward)


def sub(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out_data = a.data - b.data

    def backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g, a.data.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(-g, b.data.shape))

    return _record(out_data, (a, b), backward)


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out_data = a.data * b.data

    def backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g * b.data, a.data.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g * a.data, b.data.shape))

    return _record(out_data, (a, b), backward)


def div(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out_data = a.data / b.data

    def backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g / b.data, a.data.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(-g * a.data / (b.data * b.data), b.data.shape))

    return _record(out_data, (a, b), backward)


def matmul(a: Tensor, w: Tensor) -> Tensor:
    """a (..., K) @ w (K, M) -> (..., M); w must be 2-D."""
    a, w = _as_tensor(a), _as_tensor(w)
    if w.data.ndim != 2:
        raise ValueError("matmul right operand must be 2-D")
    if a.data.shape[-1] != w.data.shape[0]:
        raise ValueError(f"matmul shapes {a.data.shape} @ {w.data.shape} mismatch")
    out_data = a.data @ w.data

    def backward(g):
        if a.requires_grad:
            a._accumulate(g @ w.data.T)
        if w.requires_grad:
            lead = a.data.reshape(-1, a.data.shape[-1])
            w._accumulate(lead.T @ g.reshape(-1, g.shape[-1]))

    return _record(out_data, (a, w), backward)


def dense(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """Affine layer x @ w + b with x (..., K), w (K, M), b (M,)."""
    return add(matmul(x, w), b)


def relu(x: Tensor) -> Tensor:
    x = _as_tensor(x)
    mask = x.data > 0
    out_data = np.where(mask, x.data, 0.0)

    def backward(g):
        if x.requires_grad:
            x._accumulate(g * mask)

    return _record(out_data, (x,), backward)


def sigmoid(x: Tensor) -> Tensor:
    x = _as_tensor(x)
    y = 1.0 / (1.0 + np.exp(-x.data))

    def backward(g):
        if x.requires_grad:
            x._accumulate(g * y * (1.0 - y))

    return _record(y, (x,), backward)


def reshape(x: Tensor, shape) -> Tensor:
    x = _as_tensor(x)
    in_shape = x.data.shape
    out_data = x.data.reshape(shape)

    def backward(g):
        if x.requires_grad:
            x._accumulate(g.reshape(in_shape))

    return _record(out_data, (x,), backward)


def slice_axis1(x: Tensor, start: int, stop: int) -> Tensor:
    """Contiguous slice along axis 1 (the channel axis)."""
    x = _as_tensor(x)
    out_data = x.data[:, start:stop].copy()

    def backward(g):
        if x.requires_grad:
            full = np.zeros_like(x.data)
            full[:, start:stop] = g
            x._accumulate(full)

    return _record(out_data, (x,), backward)


def concat_channels(parts: Sequence[Tensor]) -> Tensor:
    parts = [_as_tensor(p) for p in parts]
    out_data = np.concatenate([p.data for p in parts], axis=1)
    sizes = [p.data.shape[1] for p in parts]

    def backward(g):
        offset = 0
        for p, size in zip(parts, sizes):
            if p.requires_grad:
                p._accumulate(g[:, offset : offset + size])
            offset += size

    return _record(out_data, tuple(parts), backward)


def sum_axis(x: Tensor, axis: int) -> Tensor:
    x = _as_tensor(x)
    out_data = x.data.sum(axis=axis)

    def backward(g):
        if x.requires_grad:
            x._accumulate(np.broadcast_to(np.expand_dims(g, axis), x.data.shape))

    return _record(out_data, (x,), backward)


def sum_all(x: Tensor) -> Tensor:
    x = _as_tensor(x)
    out_data = np.asarray(x.data.sum())

    def backward(g):
        if x.requires_grad:
            x._accumulate(np.broadcast_to(g, x.data.shape).astype(x.data.dtype))

    return _record(out_data, (x,), backward)


def mean_all(x: Tensor) -> Tensor:
    x = _as_tensor(x)
    out_data = np.asarray(x.data.mean())
    scale = 1.0 / x.data.size

    def backward(g):
        if x.requires_grad:
            x._accumulate(np.broadcast_to(g * scale, x.data.shape).astype(x.data.dtype))

    return _record(out_data, (x,), backward)


def mean_spatial(x: Tensor) -> Tensor:
    """Global mean pool (B, C, H, W) -> (B, C)."""
    x = _as_tensor(x)
    _, _, h, w = x.data.shape
    out_data = x.data.mean(axis=(2, 3))
    scale = 1.0 / (h * w)

    def backward(g):
        if x.requires_grad:
            x._accumulate(
                np.broadcast_to(g[:, :, None, None] * scale, x.data.shape).astype(
                    x.data.dtype
                )
            )

    return _record(out_data, (x,), backward)


def softmax_channels(x: Tensor) -> Tensor:
    """Softmax over axis 1 with max-subtraction for stability."""
    x = _as_tensor(x)
    shifted = x.data - x.data.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    y = exp / exp.sum(axis=1, keepdims=True)

    def backward(g):
        if x.requires_grad:
            inner = (g * y).sum(axis=1, keepdims=True)
            x._accumulate(y * (g - inner))

    return _record(y, (x,), backward)


def gather_rows(table: Tensor, idx: np.ndarray) -> Tensor:
    """Row lookup: table (R, D), idx int array (...,) -> (..., D)."""
    table = _as_tensor(table)
    idx = np.asarray(idx)
    out_data = table.data[idx]

    def backward(g):
        if table.requires_grad:
            gt = np.zeros_like(table.data)
            np.add.at(gt, idx.reshape(-1), g.reshape(-1, table.data.shape[1]))
            table._accumulate(gt)

    return _record(out_data, (table,), backward)


# ---------------------------------------------------------------------------
# spatial ops


def _reflect_indices(n: int, pad: int) -> np.ndarray:
    """Indices for symmetric 'reflect' padding (no edge duplication)."""
    if pad >= n:
        raise ValueError(f"reflection pad {pad} needs extent > {pad}, got {n}")
    left = np.arange(pad, 0, -1)
    mid = np.arange(n)
    right = np.arange(n - 2, n - 2 - pad, -1)
    return np.concatenate([left, mid, right])


def _fold_axis(grad: np.ndarray, idx: np.ndarray, n: int, axis: int) -> np.ndarray:
    """Adjoint of fancy-indexing `take` along one axis (scatter-add)."""
    moved = np.moveaxis(grad, axis, 0)
    out = np.zeros((n,) + moved.shape[1:], dtype=grad.dtype)
    np.add.at(out, idx, moved)
    return np.moveaxis(out, 0, axis)


def conv2d(x: Tensor, w: Tensor, b: Tensor | None = None, stride: int = 1) -> Tensor:
    """2-D convolution with reflection padding to keep 'same' geometry.

    x: (B, C, H, W); w: (OC, C, kh, kw); output (B, OC, H', W') where
    H' = H for stride 1 and ceil(H/2) for stride 2.
    """
    x, w = _as_tensor(x), _as_tensor(w)
    batch, chans, height, width = x.data.shape
    out_ch, in_ch, kh, kw = w.data.shape
    if in_ch != chans:
        raise ValueError(f"conv2d channel mismatch: x has {chans}, w expects {in_ch}")
    ph, pw = kh // 2, kw // 2
    rows = _reflect_indices(height, ph)
    cols = _reflect_indices(width, pw)
    padded = x.data[:, :, rows][:, :, :, cols]
    hp, wp = padded.shape[2], padded.shape[3]
    oh = (hp - kh) // stride + 1
    ow = (wp - kw) // stride + 1

    col = np.empty((batch, chans, kh, kw, oh, ow), dtype=x.data.dtype)
    for i in range(kh):
        for j in range(kw):
            col[:, :, i, j] = padded[
                :, :, i : i + oh * stride : stride, j : j + ow * stride : stride
            ]
    col_mat = col.reshape(batch, chans * kh * kw, oh * ow)
    w_mat = w.data.reshape(out_ch, -1)
    out_data = (w_mat[None] @ col_mat).reshape(batch, out_ch, oh, ow)
    if b is not None:
        out_data = out_data + b.data[None, :, None, None]

    parents = (x, w) if b is None else (x, w, b)

    def backward(g):
        g_mat = g.reshape(batch, out_ch, oh * ow)
        if b is not None and b.requires_grad:
            b._accumulate(g.sum(axis=(0, 2, 3)))
        if w.requires_grad:
            gw = np.einsum("bop,bkp->ok", g_mat, col_mat)
            w._accumulate(gw.reshape(w.data.shape))
        if x.requires_grad:
            g_col = (w_mat.T[None] @ g_mat).reshape(batch, chans, kh, kw, oh, ow)
            g_pad = np.zeros((batch, chans, hp, wp), dtype=g.dtype)
            for i in range(kh):
                for j in range(kw):
                    g_pad[
                        :, :, i : i + oh * stride : stride, j : j + ow * stride : stride
                    ] += g_col[:, :, i, j]
            folded = _fold_axis(g_pad, cols, width, axis=3)
            x._accumulate(_fold_axis(folded, rows, height, axis=2))

    return _record(out_data, parents, backward)


def avg_pool2(x: Tensor) -> Tensor:
    """Stride-2 downsample: mean over non-overlapping 2x2 blocks."""
    x = _as_tensor(x)
    batch, chans, height, width = x.data.shape
    if height % 2 or width % 2:
        raise ValueError("avg_pool2 requires even spatial extents")
    blocks = x.data.reshape(batch, chans, height // 2, 2, width // 2, 2)
    out_data = blocks.mean(axis=(3, 5))

    def backward(g):
        if x.requires_grad:
            up = np.repeat(np.repeat(g, 2, axis=2), 2, axis=3) * 0.25
            x._accumulate(up.astype(x.data.dtype))

    return _record(out_data, (x,), backward)


def upsample2_nearest(x: Tensor) -> Tensor:
    """Nearest-neighbor 2x upsample; backward sums each 2x2 block."""
    x = _as_tensor(x)
    out_data = np.repeat(np.repeat(x.data, 2, axis=2), 2, axis=3)

    def backward(g):
        batch, chans, height, width = x.data.shape
        if x.requires_grad:
            folded = g.reshape(batch, chans, height, 2, width, 2).sum(axis=(3, 5))
            x._accumulate(folded)

    return _record(out_data, (x,), backward)


def separable_transform(x: Tensor, row_mat: np.ndarray, col_mat: np.ndarray) -> Tensor:
    """y[b,c] = row_mat @ x[b,c] @ col_mat.T for constant matrices.

    One op covers every fixed linear resampling here: bilinear resize
    and Gaussian windowing both reduce to it.
    """
    x = _as_tensor(x)
    row_mat = np.asarray(row_mat, dtype=x.data.dtype)
    col_mat = np.asarray(col_mat, dtype=x.data.dtype)
    out_data = np.einsum("oh,bchw,pw->bcop", row_mat, x.data, col_mat, optimize=True)

    def backward(g):
        if x.requires_grad:
            x._accumulate(
                np.einsum("oh,bcop,pw->bchw", row_mat, g, col_mat, optimize=True)
            )

    return _record(out_data, (x,), backward)


def bilinear_resize(x: Tensor, out_h: int, out_w: int) -> Tensor:
    """Separable bilinear resize with half-pixel centers."""
    x = _as_tensor(x)
    _, _, height, width = x.data.shape
    r_mat = _resize_matrix(height, out_h, x.data.dtype)
    c_mat = _resize_matrix(width, out_w, x.data.dtype)
    return separable_transform(x, r_mat, c_mat)


def crop_spatial(x: Tensor, height: int, width: int) -> Tensor:
    """Keep the top-left height x width window; adjoint zero-pads."""
    x = _as_tensor(x)
    out_data = x.data[:, :, :height, :width].copy()

    def backward(g):
        if x.requires_grad:
            full = np.zeros_like(x.data)
            full[:, :, :height, :width] = g
            x._accumulate(full)

    return _record(out_data, (x,), backward)


def _resize_matrix(n_in: int, n_out: int, dtype) -> np.ndarray:
    mat = np.zeros((n_out, n_in), dtype=dtype)
    scale = n_in / n_out
    for o in range(n_out):
        src = (o + 0.5) * scale - 0.5
        src = min(max(src, 0.0), n_in - 1.0)
        i0 = int(math.floor(src))
        i1 = min(i0 + 1, n_in - 1)
        frac = src - i0
        mat[o, i0] += 1.0 - frac
        mat[o, i1] += frac
    return mat


def curve_lookup(curve: Tensor, pixels) -> Tensor:
    """Per-channel tone-curve application by linear interpolation.

    curve: (B, C, L) lookup tables; pixels: (B, C, H, W) values in [0, 1].
    Differentiable in the curve entries (piecewise-linear weights) and in
    the pixel values almost everywhere.
    """
    curve = _as_tensor(curve)
    pix = _as_tensor(pixels)
    batch, chans, length = curve.data.shape
    if pix.data.shape[:2] != (batch, chans):
        raise ValueError(
            f"curve {curve.data.shape} and pixels {pix.data.shape} disagree"
        )
    pos = pix.data * (length - 1)
    idx = np.clip(np.floor(pos).astype(np.int64), 0, length - 2)
    frac = pos - idx

    flat_curve = curve.data.reshape(batch * chans, length)
    flat_idx = idx.reshape(batch * chans, -1)
    lo = np.take_along_axis(flat_curve, flat_idx, axis=1)
    hi = np.take_along_axis(flat_curve, flat_idx + 1, axis=1)
    flat_frac = frac.reshape(batch * chans, -1)
    out_data = (lo * (1.0 - flat_frac) + hi * flat_frac).reshape(pix.data.shape)

    def backward(g):
        g_flat = g.reshape(batch * chans, -1)
        if curve.requires_grad:
            gc = np.zeros_like(flat_curve)
            row = np.arange(batch * chans)[:, None]
            np.add.at(gc, (row, flat_idx), g_flat * (1.0 - flat_frac))
            np.add.at(gc, (row, flat_idx + 1), g_flat * flat_frac)
            curve._accumulate(gc.reshape(curve.data.shape))
        if pix.requires_grad:
            slope = (hi - lo).reshape(pix.data.shape) * (length - 1)
            pix._accumulate(g * slope)

    return _record(out_data, (curve, pix), backward)


# ---------------------------------------------------------------------------
# optimizer and schedule


def cosine_factor(epoch: int, total_epochs: int) -> float:
    """Cosine-annealing multiplier: 1.0 at epoch 0, 0.0 at epoch==total."""
    if total_epochs <= 0:
        return 1.0
    return 0.5 * (1.0 + math.cos(math.pi * min(epoch, total_epochs) / total_epochs))


class Adam:
    """Adam with bias correction and per-group base learning rates.

    The effective rate each step is base_lr * schedule_factor, where the
    factor follows `cosine_factor` when set via `set_epoch`.
    """

    def __init__(self, groups, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8, total_epochs: int = 0):
        # groups: sequence of (params, base_lr)
        self.groups = [(list(params), float(lr)) for params, lr in groups]
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.total_epochs = total_epochs
        self.factor = 1.0
        self.step_count = 0
        self._moments = {}
        for params, _ in self.groups:
            for p in params:
                self._moments[id(p)] = (
                    np.zeros_like(p.data),
                    np.zeros_like(p.data),
                )

    def set_epoch(self, epoch: int):
        self.factor = cosine_factor(epoch, self.total_epochs)

    def step(self):
        """Apply one update from the gradients currently in .grad."""
        self.step_count += 1
        t = self.step_count
        for params, base_lr in self.groups:
            lr = base_lr * self.factor
            for p in params:
                grad = p.grad
                if grad is None:
                    continue
                if not np.isfinite(grad).all():
                    raise GradientError(
                        f"non-finite gradient in parameter {p.name or '<unnamed>'}"
                    )
                m, v = self._moments[id(p)]
                m *= self.beta1
                m += (1.0 - self.beta1) * grad
                v *= self.beta2
                v += (1.0 - self.beta2) * grad * grad
                m_hat = m / (1.0 - self.beta1**t)
                v_hat = v / (1.0 - self.beta2**t)
                p.data = p.data - lr * m_hat / (np.sqrt(v_hat) + self.eps)
