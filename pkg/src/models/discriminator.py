"""
Source-conditioned 1D-CNN discriminator over whole pose sequences
"""

import logging
from typing import Optional, Sequence, Union

import numpy as np

from src.autodiff import ParameterStore, Tensor, xavier_init
from src.autodiff.functional import concat, conv1d, leaky_relu, pad_rows, sigmoid
from src.config import DiscriminatorConfig
from src.data_processing.padding import embed_and_pad_source
from src.data_processing.pose import CorpusLimits
from src.errors import ContractError
from src.models.layers import add_linear, linear

logger = logging.getLogger(__name__)


def feature_rows(config: DiscriminatorConfig, limits: CorpusLimits) -> int:
    """Length of H: U_max pose rows, plus T_max source rows when conditioned"""
    return limits.u_max + (limits.t_max if config.conditioned else 0)


def init_discriminator_params(config: DiscriminatorConfig, pose_dim: int, vocab_size: int,
                              limits: CorpusLimits,
                              rng_seed: Union[int, np.random.Generator]) -> ParameterStore:
    """
    Xavier weights and kernels, zero biases

    Raises:
        ContractError: H is too short for the convolution stack
    """
    rows = feature_rows(config, limits)
    if rows < config.min_length():
        raise ContractError(
            f"conditioned features have {rows} rows but {config.conv_layers} convolutions of width "
            f"{config.filter_width} need at least {config.min_length()}")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    h = config.hidden_dim
    store = ParameterStore(prefix="discriminator.")
    if config.conditioned:
        add_linear(store, "source_embedding", vocab_size, h, rng)
    add_linear(store, "pose_projection", pose_dim, h, rng)
    channels = h
    for i in range(config.conv_layers):
        store.add(f"conv.{i}.kernel", xavier_init((config.conv_features, config.filter_width, channels), rng))
        store.add(f"conv.{i}.bias", Tensor(np.zeros(config.conv_features)))
        channels = config.conv_features
    add_linear(store, "head", channels, 1, rng)
    return store


def build_conditioned_features(tokens: Optional[Sequence[int]], poses: Union[Tensor, np.ndarray],
                               params: ParameterStore, config: DiscriminatorConfig,
                               limits: CorpusLimits) -> Tensor:
    """
    H = [project(pad_target(Y)) ; embed_and_pad_source(X)] along time

    Pose rows come first; padded pose rows project to the projection bias.
    An unconditioned discriminator uses the pose block alone.
    """
    poses = poses if isinstance(poses, Tensor) else Tensor(poses)
    source_len = len(tokens) if tokens is not None else 0
    limits.check(source_len, poses.shape[0])
    pose_block = linear(pad_rows(poses, limits.u_max), params, "pose_projection")
    if not config.conditioned:
        return pose_block
    if tokens is None:
        raise ContractError("a conditioned discriminator needs the source tokens")
    source_block = embed_and_pad_source(tokens, params["source_embedding.weight"],
                                        params["source_embedding.bias"], limits.t_max)
    return concat([pose_block, source_block], axis=0)


def discriminate(tokens: Optional[Sequence[int]], poses: Union[Tensor, np.ndarray],
                 params: ParameterStore, config: DiscriminatorConfig, limits: CorpusLimits) -> Tensor:
    """
    Probability d_p that ``poses`` is a real production of ``tokens``

    conv -> leaky ReLU per layer, temporal mean pool, linear head, sigmoid.
    """
    x = build_conditioned_features(tokens, poses, params, config, limits)
    for i in range(config.conv_layers):
        x = conv1d(x, params[f"conv.{i}.kernel"]) + params[f"conv.{i}.bias"]
        x = leaky_relu(x, config.leaky_slope)
    pooled = x.mean(axis=0, keepdims=True)
    return sigmoid(linear(pooled, params, "head")).reshape(())


class ConditionalDiscriminator:
    """Discriminator parameters bundled with their config and corpus limits"""

    def __init__(self, config: DiscriminatorConfig, pose_dim: int, vocab_size: int,
                 limits: CorpusLimits, seed: Union[int, np.random.Generator] = 0):
        self.config = config
        self.limits = limits
        self.params = init_discriminator_params(config, pose_dim, vocab_size, limits, seed)
        logger.debug(f"🛡️  Discriminator ready: {self.params.num_values()} values, "
                     f"H has {feature_rows(config, limits)} rows")

    def __call__(self, tokens: Optional[Sequence[int]], poses: Union[Tensor, np.ndarray]) -> Tensor:
        return discriminate(tokens, poses, self.params, self.config, self.limits)

    def build_conditioned_features(self, tokens, poses) -> Tensor:
        return build_conditioned_features(tokens, poses, self.params, self.config, self.limits)
