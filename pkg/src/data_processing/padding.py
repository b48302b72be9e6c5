"""
Fixed-length padding of targets and embedded sources
"""

from typing import Sequence, Union

import numpy as np

from src.autodiff import Tensor
from src.autodiff.functional import pad_rows, take_rows
from src.data_processing.pose import PoseSequence
from src.errors import ContractError, VocabularyError


def pad_target(seq: Union[PoseSequence, np.ndarray], u_max: int) -> np.ndarray:
    """
    U_max × D_y matrix: frame values, then zero rows (counters dropped)

    Raises:
        ContractError: U > U_max
    """
    values = seq.values if isinstance(seq, PoseSequence) else np.asarray(seq, dtype=np.float64)
    if values.shape[0] > u_max:
        raise ContractError(f"target has {values.shape[0]} frames, U_max is {u_max}")
    out = np.zeros((u_max, values.shape[1]), dtype=np.float64)
    out[:values.shape[0]] = values
    return out


def embed_and_pad_source(tokens: Sequence[int], w_x: Tensor, b_x: Tensor, t_max: int) -> Tensor:
    """
    T_max × D_e source matrix: W_x[token_t] + b_x for each token, then zero rows

    Raises:
        VocabularyError: a token id is not a row of W_x
        ContractError: T > T_max
    """
    tokens = list(tokens)
    bad = [t for t in tokens if not 0 <= int(t) < w_x.shape[0]]
    if bad:
        raise VocabularyError(f"token ids outside embedding table of {w_x.shape[0]} rows", bad)
    if len(tokens) > t_max:
        raise ContractError(f"source has {len(tokens)} tokens, T_max is {t_max}")
    if not tokens:
        return Tensor(np.zeros((t_max, w_x.shape[1])))
    return pad_rows(take_rows(w_x, tokens) + b_x, t_max)
