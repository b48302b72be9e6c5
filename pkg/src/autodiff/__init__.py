"""
Reverse-mode automatic differentiation on numpy arrays
"""

from src.autodiff.tensor import ComputationTape, Tensor, backward, matmul, no_grad
from src.autodiff.optimizer import AdamState, ParameterStore, adam_step, xavier_init
from src.autodiff.checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "Tensor", "ComputationTape", "backward", "matmul", "no_grad",
    "AdamState", "ParameterStore", "adam_step", "xavier_init",
    "save_checkpoint", "load_checkpoint",
]
