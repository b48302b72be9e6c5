"""
Generator and discriminator objectives
"""

from typing import Optional, Tuple, Union

import numpy as np

from src.autodiff import Tensor
from src.autodiff.functional import clamp, mse
from src.autodiff.tensor import as_tensor
from src.config import GanMode, TrainConfig
from src.data_processing.pose import CorpusExample
from src.errors import DimensionError

D_CLAMP = 1e-7


def regression_loss(pred: Tensor, target: Union[Tensor, np.ndarray],
                    pred_counter: Tensor, target_counter: Union[Tensor, np.ndarray]) -> Tensor:
    """
    MSE over every pose element plus MSE over the counters, equally weighted

    Raises:
        DimensionError: prediction and target shapes differ
    """
    target = as_tensor(target)
    target_counter = as_tensor(target_counter)
    if pred.shape != target.shape:
        raise DimensionError("pose prediction and target differ in shape", pred.shape, target.shape)
    if pred_counter.shape != target_counter.shape:
        raise DimensionError("counter prediction and target differ in shape",
                             pred_counter.shape, target_counter.shape)
    return mse(pred, target) + mse(pred_counter, target_counter)


def adversarial_loss(d_p_fake: Tensor, gan_mode: GanMode = GanMode.NON_SATURATING) -> Tensor:
    """-log d (non-saturating) or log(1 - d) (literal minimax term)"""
    d = as_tensor(d_p_fake)
    if GanMode(gan_mode) == GanMode.MINIMAX_LITERAL:
        return (1.0 - d).log()
    return -d.log()


def example_regression_loss(example: CorpusExample, g_out: Tuple[Tensor, Tensor]) -> Tensor:
    """regression_loss of a teacher-forced forward against its ground truth"""
    poses, counters = g_out
    return regression_loss(poses, example.target.values, counters, example.target.counters)


def generator_loss(example: CorpusExample, g_out: Tuple[Tensor, Tensor], d_p_fake: Optional[Tensor],
                   config: TrainConfig) -> Tensor:
    """
    λ_Reg·L_Reg + λ_GAN·L_adv

    Without a discriminator score (regression-only training) or with
    λ_GAN = 0 the adversarial term is left out of the graph, so the loss
    and its gradients are exactly those of regression-only training.
    """
    loss = config.lambda_reg * example_regression_loss(example, g_out)
    if d_p_fake is None or config.lambda_gan == 0.0:
        return loss
    return loss + config.lambda_gan * adversarial_loss(d_p_fake, config.gan_mode)


def discriminator_loss(d_p_real: Tensor, d_p_fake: Tensor) -> Tensor:
    """-[log d_real + log(1 - d_fake)], inputs clamped to [1e-7, 1 - 1e-7]"""
    real = clamp(as_tensor(d_p_real), D_CLAMP, 1.0 - D_CLAMP)
    fake = clamp(as_tensor(d_p_fake), D_CLAMP, 1.0 - D_CLAMP)
    return -(real.log() + (1.0 - fake).log())
