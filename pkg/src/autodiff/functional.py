"""
Differentiable primitives used by the generator and discriminator
"""

from typing import Optional, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from src.autodiff.tensor import DTYPE, Tensor, as_tensor, matmul
from src.errors import ContractError, DimensionError, SequenceTooShortError

__all__ = [
    "matmul", "conv1d", "softmax", "leaky_relu", "sigmoid", "relu", "layer_norm",
    "dropout", "masked_fill", "concat", "take_rows", "pad_rows", "clamp", "mse",
]

LAYER_NORM_EPS = 1e-8
_SIGMOID_EDGE = np.finfo(DTYPE).eps


def conv1d(x: Tensor, kernels: Tensor, stride: int = 1) -> Tensor:
    """
    Valid temporal convolution

    Args:
        x: time × in_ch input
        kernels: out_ch × width × in_ch filters
        stride: step between windows

    Returns:
        time' × out_ch with time' = floor((time - width) / stride) + 1
    """
    if stride < 1:
        raise ContractError(f"conv1d stride must be >= 1, got {stride}")
    if x.ndim != 2 or kernels.ndim != 3 or kernels.shape[2] != x.shape[1]:
        raise DimensionError("conv1d expects time×in_ch input and out_ch×width×in_ch kernels",
                             x.shape, kernels.shape)
    time, in_ch = x.shape
    out_ch, width, _ = kernels.shape
    if time < width:
        raise SequenceTooShortError(
            f"conv1d input has {time} steps but the filter is {width} wide", x.shape, kernels.shape)

    windows = sliding_window_view(x.data, width, axis=0)[::stride]
    steps = windows.shape[0]
    # (steps, in_ch, width) -> (steps, width*in_ch), matching the kernel layout
    cols = np.ascontiguousarray(windows.transpose(0, 2, 1)).reshape(steps, width * in_ch)
    flat = kernels.data.reshape(out_ch, width * in_ch)

    def _bw(g):
        g_kernels = (g.T @ cols).reshape(out_ch, width, in_ch)
        g_cols = (g @ flat).reshape(steps, width, in_ch)
        g_x = np.zeros((time, in_ch), dtype=DTYPE)
        span = stride * (steps - 1) + 1
        for w in range(width):
            g_x[w:w + span:stride] += g_cols[:, w, :]
        return g_x, g_kernels

    return Tensor._from_op(cols @ flat.T, (x, kernels), _bw, "conv1d")


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    """Max-shifted softmax; entries at -inf get exactly zero weight"""
    shifted = x.data - np.max(x.data, axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)

    def _bw(g):
        return (y * (g - (g * y).sum(axis=axis, keepdims=True)),)

    return Tensor._from_op(y, (x,), _bw, "softmax")


def leaky_relu(x: Tensor, slope: float = 0.2) -> Tensor:
    if not 0.0 < slope < 1.0:
        raise ContractError(f"leaky_relu slope must lie in (0, 1), got {slope}")
    positive = x.data >= 0
    return Tensor._from_op(np.where(positive, x.data, slope * x.data), (x,),
                           lambda g: (np.where(positive, g, slope * g),), "leaky_relu")


def relu(x: Tensor) -> Tensor:
    positive = x.data > 0
    return Tensor._from_op(np.where(positive, x.data, 0.0), (x,),
                           lambda g: (np.where(positive, g, 0.0),), "relu")


def sigmoid(x: Tensor) -> Tensor:
    """Elementwise logistic, kept strictly inside (0, 1)"""
    z = x.data
    e = np.exp(-np.abs(z))
    s = np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    out = np.clip(s, _SIGMOID_EDGE, 1.0 - _SIGMOID_EDGE)
    return Tensor._from_op(out, (x,), lambda g: (g * s * (1.0 - s),), "sigmoid")


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = LAYER_NORM_EPS) -> Tensor:
    """Normalise the last axis to zero mean / unit variance, then scale and shift"""
    features = x.shape[-1]
    if gain.shape != (features,) or bias.shape != (features,):
        raise DimensionError("layer_norm gain/bias must match the feature axis",
                             x.shape, gain.shape, bias.shape)
    mu = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mu
    inv_std = 1.0 / np.sqrt((centered ** 2).mean(axis=-1, keepdims=True) + eps)
    x_hat = centered * inv_std
    lead_axes = tuple(range(x.ndim - 1))

    def _bw(g):
        g_hat = g * gain.data
        g_x = inv_std / features * (
            features * g_hat
            - g_hat.sum(axis=-1, keepdims=True)
            - x_hat * (g_hat * x_hat).sum(axis=-1, keepdims=True))
        return g_x, (g * x_hat).sum(axis=lead_axes), g.sum(axis=lead_axes)

    return Tensor._from_op(x_hat * gain.data + bias.data, (x, gain, bias), _bw, "layer_norm")


def dropout(x: Tensor, rate: float, rng: Optional[np.random.Generator], training: bool) -> Tensor:
    if not training or rate <= 0.0 or rng is None:
        return x
    keep = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return Tensor._from_op(x.data * keep, (x,), lambda g: (g * keep,), "dropout")


def masked_fill(x: Tensor, keep: np.ndarray, value: float = -np.inf) -> Tensor:
    """Replace entries where ``keep`` is False by ``value`` (no gradient flows there)"""
    keep = np.asarray(keep, dtype=bool)
    return Tensor._from_op(np.where(keep, x.data, value), (x,),
                           lambda g: (np.where(keep, g, 0.0),), "masked_fill")


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    bounds = np.cumsum(sizes)[:-1]

    def _bw(g):
        return tuple(np.split(g, bounds, axis=axis))

    return Tensor._from_op(np.concatenate([t.data for t in tensors], axis=axis),
                           tuple(tensors), _bw, "concat")


def take_rows(table: Tensor, ids: Sequence[int]) -> Tensor:
    """Embedding lookup: row ``ids[i]`` of ``table`` for each i"""
    ids = np.asarray(ids, dtype=np.int64)
    shape = table.shape

    def _bw(g):
        full = np.zeros(shape, dtype=DTYPE)
        np.add.at(full, ids, g)
        return (full,)

    return Tensor._from_op(table.data[ids], (table,), _bw, "take_rows")


def pad_rows(x: Tensor, length: int) -> Tensor:
    """Append zero rows so the first axis has ``length`` entries"""
    if x.shape[0] > length:
        raise ContractError(f"cannot pad {x.shape[0]} rows down to {length}")
    if x.shape[0] == length:
        return x
    zeros = Tensor(np.zeros((length - x.shape[0],) + x.shape[1:], dtype=DTYPE))
    return concat([x, zeros], axis=0)


def clamp(x: Tensor, low: float, high: float) -> Tensor:
    inside = (x.data >= low) & (x.data <= high)
    return Tensor._from_op(np.clip(x.data, low, high), (x,),
                           lambda g: (np.where(inside, g, 0.0),), "clamp")


def mse(prediction: Tensor, target) -> Tensor:
    target = as_tensor(target)
    if prediction.shape != target.shape:
        raise DimensionError("mse operands differ in shape", prediction.shape, target.shape)
    diff = prediction - target
    return (diff * diff).mean()
