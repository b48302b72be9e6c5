"""
Central finite-difference gradient checks
"""

from typing import Callable, Dict, Mapping

import numpy as np

from src.autodiff.tensor import Tensor, backward, no_grad

FD_STEP = 1e-5
ZERO_FLOOR = 1e-8


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """
    ||a - n|| / (||a|| + ||n||)

    0 when both norms are below ZERO_FLOOR: a gradient that is zero for
    every input (e.g. attention key biases) matches its finite difference.
    """
    a_norm = np.linalg.norm(np.ravel(analytic))
    n_norm = np.linalg.norm(np.ravel(numeric))
    if a_norm < ZERO_FLOOR and n_norm < ZERO_FLOOR:
        return 0.0
    diff = np.linalg.norm(np.ravel(analytic) - np.ravel(numeric))
    scale = a_norm + n_norm
    return float(diff / max(scale, 1e-12))


def numerical_gradient(loss_fn: Callable[[], Tensor], tensor: Tensor, h: float = FD_STEP) -> np.ndarray:
    """
    d loss / d tensor by central differences, perturbing ``tensor.data`` in place

    Args:
        loss_fn: Rebuilds the scalar loss from the current tensor values
        tensor: Tensor to perturb
        h: Step size
    """
    grad = np.zeros_like(tensor.data)
    flat = tensor.data.reshape(-1)
    with no_grad():
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + h
            plus = loss_fn().item()
            flat[i] = original - h
            minus = loss_fn().item()
            flat[i] = original
            grad.reshape(-1)[i] = (plus - minus) / (2.0 * h)
    return grad


def check_gradients(loss_fn: Callable[[], Tensor], tensors: Mapping[str, Tensor],
                    h: float = FD_STEP) -> Dict[str, float]:
    """
    Relative error between backward() and finite differences for each tensor

    Returns:
        name -> relative error
    """
    for t in tensors.values():
        t.grad = None
    backward(loss_fn())
    analytic = {name: (t.grad.copy() if t.grad is not None else np.zeros_like(t.data))
                for name, t in tensors.items()}
    return {name: relative_error(analytic[name], numerical_gradient(loss_fn, t, h))
            for name, t in tensors.items()}
