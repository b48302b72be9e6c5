"""
Parameter containers, Xavier initialisation and the Adam optimizer
"""

import logging
from collections import OrderedDict
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Dict, Iterator, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from src.autodiff.tensor import DTYPE, Tensor
from src.errors import ContractError, MissingGradientError

logger = logging.getLogger(__name__)

SeedLike = Union[int, np.random.Generator]


def _fans(shape: Sequence[int]) -> Tuple[int, int]:
    """
    fan_in / fan_out of a weight

    Matrices are stored input-major (x @ W), so shape (in, out). Conv kernels
    are (out_ch, width, in_ch) and the receptive field multiplies both fans.
    """
    if len(shape) == 1:
        return shape[0], shape[0]
    if len(shape) == 2:
        return shape[0], shape[1]
    receptive = int(np.prod(shape[1:-1]))
    return shape[-1] * receptive, shape[0] * receptive


def xavier_init(shape: Sequence[int], rng_seed: SeedLike) -> Tensor:
    """
    Glorot-uniform tensor in ±sqrt(6 / (fan_in + fan_out))

    Args:
        shape: Tensor shape, at least one dimension
        rng_seed: Integer seed or an existing generator (consumed in order)

    Returns:
        A leaf tensor with requires_grad=True
    """
    shape = tuple(int(s) for s in shape)
    if not shape or any(s < 1 for s in shape):
        raise ContractError(f"xavier_init needs positive dimensions, got {shape}")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    fan_in, fan_out = _fans(shape)
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True)


class ParameterStore:
    """Named learnable tensors of one model"""

    def __init__(self, prefix: str = ""):
        self.prefix = prefix
        self._tensors: "OrderedDict[str, Tensor]" = OrderedDict()

    def add(self, name: str, tensor: Tensor) -> Tensor:
        if name in self._tensors:
            raise ContractError(f"parameter '{name}' registered twice")
        tensor.requires_grad = True
        tensor.name = name
        self._tensors[name] = tensor
        return tensor

    def __getitem__(self, name: str) -> Tensor:
        return self._tensors[name]

    def __contains__(self, name: str) -> bool:
        return name in self._tensors

    def __iter__(self) -> Iterator[str]:
        return iter(self._tensors)

    def __len__(self) -> int:
        return len(self._tensors)

    def items(self):
        return self._tensors.items()

    def num_values(self) -> int:
        return int(sum(t.size for t in self._tensors.values()))

    def zero_grad(self) -> None:
        for tensor in self._tensors.values():
            tensor.grad = None

    @contextmanager
    def frozen(self):
        """Stop recording gradients for these tensors inside the block"""
        for tensor in self._tensors.values():
            tensor.requires_grad = False
        try:
            yield self
        finally:
            for tensor in self._tensors.values():
                tensor.requires_grad = True

    def state_dict(self) -> Dict[str, np.ndarray]:
        return OrderedDict((self.prefix + name, t.data.copy()) for name, t in self._tensors.items())

    def load_state_dict(self, arrays: Mapping[str, np.ndarray]) -> None:
        for name, tensor in self._tensors.items():
            key = self.prefix + name
            if key not in arrays:
                raise ContractError(f"checkpoint is missing tensor '{key}'")
            value = np.asarray(arrays[key], dtype=DTYPE)
            if value.shape != tensor.shape:
                raise ContractError(f"tensor '{key}' has shape {value.shape}, expected {tensor.shape}")
            tensor.data = value.copy()

    def copy(self) -> "ParameterStore":
        clone = ParameterStore(self.prefix)
        for name, tensor in self._tensors.items():
            clone.add(name, Tensor(tensor.data))
        return clone


@dataclass
class AdamState:
    """First/second moments and step count for one ParameterStore"""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(params: ParameterStore, state: AdamState) -> ParameterStore:
    """
    One bias-corrected Adam update; gradients are cleared afterwards

    Raises:
        MissingGradientError: a parameter has no gradient
    """
    for name, tensor in params.items():
        if tensor.grad is None:
            raise MissingGradientError(name)

    state.step += 1
    correction1 = 1.0 - state.beta1 ** state.step
    correction2 = 1.0 - state.beta2 ** state.step
    for name, tensor in params.items():
        g = tensor.grad
        m = state.m.get(name)
        v = state.v.get(name)
        if m is None:
            m = np.zeros_like(tensor.data)
            v = np.zeros_like(tensor.data)
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * g * g
        state.m[name], state.v[name] = m, v
        m_hat = m / correction1
        v_hat = v / correction2
        tensor.data = tensor.data - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
        tensor.grad = None
    return params
