"""
Oracle back-translation: pose windows -> nearest primitive tokens
"""

from typing import Optional, Union

import numpy as np

from src.data_processing.pose import PoseSequence, TokenSequence
from src.data_processing.primitives import PrimitiveBank
from src.errors import ContractError


def window_distances(window: np.ndarray, bank: PrimitiveBank) -> np.ndarray:
    """Mean squared distance from ``window`` to the leading frames of every motif"""
    frames = window.shape[0]
    diff = bank.motifs[:, :frames, :] - window[None, :, :]
    return (diff * diff).mean(axis=(1, 2))


def back_translate_oracle(poses: Union[PoseSequence, np.ndarray], bank: PrimitiveBank,
                          motif_len: Optional[int] = None) -> TokenSequence:
    """
    Decode a pose sequence into the tokens whose primitives it is made of

    The sequence is cut into consecutive windows of ``motif_len`` frames and
    each window maps to the token of the closest primitive (ties go to the
    lowest bank entry). A trailing partial window is matched against motif
    prefixes when it holds at least motif_len / 2 frames, dropped otherwise.

    Args:
        poses: Generated or ground-truth frames (U × pose_dim)
        bank: Primitive bank of the corpus, projected to the same channels
        motif_len: Window length; defaults to the bank's motif length

    Returns:
        Token ids, empty for an empty sequence
    """
    values = poses.values if isinstance(poses, PoseSequence) else np.asarray(poses, dtype=np.float64)
    motif_len = bank.motif_len if motif_len is None else int(motif_len)
    if motif_len != bank.motif_len:
        raise ContractError(f"window length {motif_len} differs from the bank's motif length {bank.motif_len}")
    if values.size == 0:
        return ()
    if values.ndim != 2 or values.shape[1] != bank.layout.pose_dim:
        raise ContractError(f"poses have shape {values.shape}, bank motifs are {bank.layout.pose_dim} wide")

    tokens = []
    for start in range(0, values.shape[0], motif_len):
        window = values[start:start + motif_len]
        if window.shape[0] < motif_len and 2 * window.shape[0] < motif_len:
            break
        tokens.append(int(bank.token_ids[int(np.argmin(window_distances(window, bank)))]))
    return tuple(tokens)
