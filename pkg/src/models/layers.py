"""
Transformer building blocks over the autodiff tensors
"""

from typing import Optional, Tuple, Union

import numpy as np

from src.autodiff import ParameterStore, Tensor, xavier_init
from src.autodiff.functional import dropout, layer_norm, masked_fill, relu, softmax
from src.errors import ContractError


def sinusoidal_encoding(length: int, dim: int) -> np.ndarray:
    """Fixed sin/cos position table, length × dim"""
    positions = np.arange(length, dtype=np.float64)[:, None]
    rates = np.exp(-np.log(10000.0) * (2 * (np.arange(dim) // 2)) / dim)[None, :]
    angles = positions * rates
    table = np.empty((length, dim), dtype=np.float64)
    table[:, 0::2] = np.sin(angles[:, 0::2])
    table[:, 1::2] = np.cos(angles[:, 1::2])
    return table


def causal_mask(length: int) -> np.ndarray:
    """keep[q, k] is True for k <= q"""
    return np.tril(np.ones((length, length), dtype=bool))


# ----------------------------------------------------------------------
# Parameter registration
# ----------------------------------------------------------------------
def add_linear(store: ParameterStore, name: str, d_in: int, d_out: int, rng: np.random.Generator) -> None:
    store.add(f"{name}.weight", xavier_init((d_in, d_out), rng))
    store.add(f"{name}.bias", Tensor(np.zeros(d_out)))


def add_layer_norm(store: ParameterStore, name: str, dim: int) -> None:
    store.add(f"{name}.gain", Tensor(np.ones(dim)))
    store.add(f"{name}.bias", Tensor(np.zeros(dim)))


def add_attention(store: ParameterStore, name: str, dim: int, rng: np.random.Generator) -> None:
    for proj in ("query", "key", "value", "output"):
        add_linear(store, f"{name}.{proj}", dim, dim, rng)


def add_feed_forward(store: ParameterStore, name: str, dim: int, hidden: int, rng: np.random.Generator) -> None:
    add_linear(store, f"{name}.hidden", dim, hidden, rng)
    add_linear(store, f"{name}.output", hidden, dim, rng)


# ----------------------------------------------------------------------
# Forward functions
# ----------------------------------------------------------------------
def linear(x: Tensor, store: ParameterStore, name: str) -> Tensor:
    return x @ store[f"{name}.weight"] + store[f"{name}.bias"]


def norm(x: Tensor, store: ParameterStore, name: str) -> Tensor:
    return layer_norm(x, store[f"{name}.gain"], store[f"{name}.bias"])


def _split_heads(x: Tensor, heads: int) -> Tensor:
    length, dim = x.shape
    return x.reshape(length, heads, dim // heads).transpose(1, 0, 2)


def multi_head_attention(query: Tensor, key: Tensor, value: Tensor, store: ParameterStore, name: str,
                         heads: int, keep: Optional[np.ndarray] = None,
                         return_weights: bool = False) -> Union[Tensor, Tuple[Tensor, np.ndarray]]:
    """
    softmax(QKᵀ/√d_head, masked) · V per head, concatenated and projected

    Args:
        query: Tq × D inputs
        key, value: Tk × D inputs
        keep: Boolean mask of shape (Tk,) or (Tq, Tk); False positions get -inf
        return_weights: Also return the heads × Tq × Tk attention weights

    Raises:
        ContractError: mask does not cover the key positions
    """
    tq, dim = query.shape
    tk = key.shape[0]
    if dim % heads:
        raise ContractError(f"model width {dim} is not divisible by {heads} heads")
    if keep is not None:
        keep = np.asarray(keep, dtype=bool)
        if keep.shape[-1] != tk or (keep.ndim == 2 and keep.shape[0] != tq) or keep.ndim > 2:
            raise ContractError(f"attention mask of shape {keep.shape} does not cover {tq}×{tk} scores")

    q = _split_heads(linear(query, store, f"{name}.query"), heads)
    k = _split_heads(linear(key, store, f"{name}.key"), heads)
    v = _split_heads(linear(value, store, f"{name}.value"), heads)

    scores = (q @ k.transpose(0, 2, 1)) * (1.0 / np.sqrt(dim // heads))
    if keep is not None:
        scores = masked_fill(scores, np.broadcast_to(keep, (tq, tk)))
    weights = softmax(scores, axis=-1)
    context = (weights @ v).transpose(1, 0, 2).reshape(tq, dim)
    out = linear(context, store, f"{name}.output")
    if return_weights:
        return out, weights.data.copy()
    return out


def feed_forward(x: Tensor, store: ParameterStore, name: str, rate: float = 0.0,
                 rng: Optional[np.random.Generator] = None, training: bool = False) -> Tensor:
    hidden = relu(linear(x, store, f"{name}.hidden"))
    return linear(dropout(hidden, rate, rng, training), store, f"{name}.output")
