"""
Progressive transformer generator with counter decoding
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from src.autodiff import ParameterStore, Tensor, no_grad, xavier_init
from src.autodiff.functional import dropout, sigmoid, take_rows
from src.config import GeneratorConfig
from src.data_processing.pose import ChannelLayout, CorpusExample, PoseSequence
from src.data_processing.vocabulary import PAD_ID
from src.errors import ContractError, VocabularyError
from src.models.layers import (
    add_attention,
    add_feed_forward,
    add_layer_norm,
    add_linear,
    causal_mask,
    feed_forward,
    linear,
    multi_head_attention,
    norm,
    sinusoidal_encoding,
)

logger = logging.getLogger(__name__)


@dataclass
class EncodedSource:
    """Encoder output and the positions that hold real tokens"""

    memory: Tensor
    source_mask: np.ndarray


def _require_sizes(config: GeneratorConfig) -> Tuple[int, int]:
    if config.pose_dim is None or config.vocab_size is None:
        raise ContractError("generator config needs pose_dim and vocab_size; call config.resolved(...)")
    return config.pose_dim, config.vocab_size


def init_generator_params(config: GeneratorConfig, rng_seed: Union[int, np.random.Generator]) -> ParameterStore:
    """Xavier weights, zero biases, unit layer-norm gains"""
    pose_dim, vocab_size = _require_sizes(config)
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    d, ff = config.embed_dim, config.feedforward_dim
    store = ParameterStore(prefix="generator.")
    store.add("source_embedding", xavier_init((vocab_size, d), rng))
    for i in range(config.layers):
        add_attention(store, f"encoder.{i}.self_attention", d, rng)
        add_layer_norm(store, f"encoder.{i}.norm1", d)
        add_feed_forward(store, f"encoder.{i}.feed_forward", d, ff, rng)
        add_layer_norm(store, f"encoder.{i}.norm2", d)
    add_linear(store, "pose_input", pose_dim + 1, d, rng)
    for i in range(config.layers):
        add_attention(store, f"decoder.{i}.self_attention", d, rng)
        add_layer_norm(store, f"decoder.{i}.norm1", d)
        add_attention(store, f"decoder.{i}.cross_attention", d, rng)
        add_layer_norm(store, f"decoder.{i}.norm2", d)
        add_feed_forward(store, f"decoder.{i}.feed_forward", d, ff, rng)
        add_layer_norm(store, f"decoder.{i}.norm3", d)
    add_linear(store, "output", d, pose_dim + 1, rng)
    return store


def begin_of_sequence(pose_dim: int) -> np.ndarray:
    """Decoder start row: zero pose, counter 0"""
    return np.zeros((1, pose_dim + 1))


def encode_source(tokens: Sequence[int], params: ParameterStore, config: GeneratorConfig,
                  training: bool = False, rng: Optional[np.random.Generator] = None) -> EncodedSource:
    """
    Embed tokens, add positions, run the encoder stack

    PAD (id 0) positions are excluded as attention keys.
    """
    _, vocab_size = _require_sizes(config)
    tokens = np.asarray(tokens, dtype=np.int64)
    if tokens.size == 0:
        raise ContractError("cannot encode an empty token sequence")
    bad = tokens[(tokens < 0) | (tokens >= vocab_size)]
    if bad.size:
        raise VocabularyError(f"token ids outside vocabulary of size {vocab_size}", bad.tolist())
    keep = tokens != PAD_ID
    if not keep.any():
        raise ContractError("source holds only padding")

    x = take_rows(params["source_embedding"], tokens) + sinusoidal_encoding(len(tokens), config.embed_dim)
    x = dropout(x, config.dropout, rng, training)
    for i in range(config.layers):
        name = f"encoder.{i}"
        attended = multi_head_attention(x, x, x, params, f"{name}.self_attention", config.heads, keep)
        x = norm(x + dropout(attended, config.dropout, rng, training), params, f"{name}.norm1")
        hidden = feed_forward(x, params, f"{name}.feed_forward", config.dropout, rng, training)
        x = norm(x + dropout(hidden, config.dropout, rng, training), params, f"{name}.norm2")
    return EncodedSource(memory=x, source_mask=keep)


def decode(inputs: np.ndarray, encoded: EncodedSource, params: ParameterStore, config: GeneratorConfig,
           training: bool = False, rng: Optional[np.random.Generator] = None) -> Tuple[Tensor, Tensor]:
    """
    Causally masked decoder pass over U continuous input rows

    Args:
        inputs: U × (pose_dim + 1) rows, BOS first; the counter column is
            ignored unless config.feed_counter is set

    Returns:
        (U × pose_dim poses, U counters in (0, 1)); row u only sees inputs[:u+1]
    """
    pose_dim, _ = _require_sizes(config)
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.ndim != 2 or inputs.shape[1] != pose_dim + 1:
        raise ContractError(f"decoder rows must be {pose_dim + 1} wide, got shape {inputs.shape}")
    length = inputs.shape[0]
    if not config.feed_counter:
        inputs = inputs.copy()
        inputs[:, pose_dim] = 0.0

    x = linear(Tensor(inputs), params, "pose_input") + sinusoidal_encoding(length, config.embed_dim)
    x = dropout(x, config.dropout, rng, training)
    self_keep = causal_mask(length)
    memory = encoded.memory
    for i in range(config.layers):
        name = f"decoder.{i}"
        attended = multi_head_attention(x, x, x, params, f"{name}.self_attention", config.heads, self_keep)
        x = norm(x + dropout(attended, config.dropout, rng, training), params, f"{name}.norm1")
        crossed = multi_head_attention(x, memory, memory, params, f"{name}.cross_attention",
                                       config.heads, encoded.source_mask)
        x = norm(x + dropout(crossed, config.dropout, rng, training), params, f"{name}.norm2")
        hidden = feed_forward(x, params, f"{name}.feed_forward", config.dropout, rng, training)
        x = norm(x + dropout(hidden, config.dropout, rng, training), params, f"{name}.norm3")

    out = linear(x, params, "output")
    return out[:, :pose_dim], sigmoid(out[:, pose_dim])


def decode_step(prev_frames: np.ndarray, encoded: EncodedSource, params: ParameterStore,
                config: GeneratorConfig) -> Tuple[np.ndarray, float]:
    """
    Predict frame u from the u-1 frames produced so far

    Args:
        prev_frames: (u-1) × (pose_dim + 1) pose+counter rows; may be empty

    Returns:
        (pose values, counter)
    """
    pose_dim, _ = _require_sizes(config)
    prev_frames = np.asarray(prev_frames, dtype=np.float64)
    if prev_frames.size == 0:
        prev_frames = prev_frames.reshape(0, pose_dim + 1)
    if prev_frames.ndim != 2 or prev_frames.shape[1] != pose_dim + 1:
        raise ContractError(f"previous frames must be {pose_dim + 1} wide, got shape {prev_frames.shape}")
    inputs = np.vstack([begin_of_sequence(pose_dim), prev_frames])
    poses, counters = decode(inputs, encoded, params, config)
    return poses.data[-1].copy(), float(counters.data[-1])


def teacher_inputs(target: PoseSequence) -> np.ndarray:
    """Ground-truth rows shifted right by one, BOS first"""
    rows = target.with_counters()
    return np.vstack([begin_of_sequence(rows.shape[1] - 1), rows[:-1]])


def forward_teacher_forced(example: CorpusExample, params: ParameterStore, config: GeneratorConfig,
                           training: bool = False,
                           rng: Optional[np.random.Generator] = None) -> Tuple[Tensor, Tensor]:
    """All U predictions in one causally masked pass over the shifted ground truth"""
    encoded = encode_source(example.source, params, config, training, rng)
    return decode(teacher_inputs(example.target), encoded, params, config, training, rng)


def generate(tokens: Sequence[int], params: ParameterStore, config: GeneratorConfig, max_frames: int,
             layout: Optional[ChannelLayout] = None, stop_threshold: Optional[float] = None) -> PoseSequence:
    """
    Free-running decoding until the counter reaches ``stop_threshold``

    Returns:
        The produced frames with their predicted counters; ``truncated`` is
        set when max_frames was reached first
    """
    pose_dim, _ = _require_sizes(config)
    if max_frames < 1:
        raise ContractError(f"max_frames must be >= 1, got {max_frames}")
    if layout is None:
        layout = ChannelLayout.for_width(pose_dim)
    if layout.pose_dim != pose_dim:
        raise ContractError(f"layout has {layout.pose_dim} columns, generator produces {pose_dim}")
    threshold = config.stop_threshold if stop_threshold is None else stop_threshold

    rows = np.zeros((0, pose_dim + 1))
    stopped = False
    with no_grad():
        encoded = encode_source(tokens, params, config)
        for _ in range(max_frames):
            pose, counter = decode_step(rows, encoded, params, config)
            rows = np.vstack([rows, np.append(pose, counter)])
            if counter >= threshold:
                stopped = True
                break
    return PoseSequence(rows[:, :pose_dim], rows[:, pose_dim], layout, truncated=not stopped)


class ProgressiveTransformer:
    """Generator parameters bundled with their config"""

    def __init__(self, config: GeneratorConfig, seed: Union[int, np.random.Generator] = 0,
                 layout: Optional[ChannelLayout] = None):
        self.config = config
        self.layout = layout
        self.params = init_generator_params(config, seed)
        logger.debug(f"🤖 Generator ready: {self.params.num_values()} values, "
                     f"{config.layers} layers, {config.heads} heads, width {config.embed_dim}")

    def encode_source(self, tokens: Sequence[int]) -> EncodedSource:
        return encode_source(tokens, self.params, self.config)

    def decode_step(self, prev_frames: np.ndarray, encoded: EncodedSource) -> Tuple[np.ndarray, float]:
        return decode_step(prev_frames, encoded, self.params, self.config)

    def forward_teacher_forced(self, example: CorpusExample, training: bool = False,
                               rng: Optional[np.random.Generator] = None) -> Tuple[Tensor, Tensor]:
        return forward_teacher_forced(example, self.params, self.config, training, rng)

    def generate(self, tokens: Sequence[int], max_frames: int,
                 stop_threshold: Optional[float] = None) -> PoseSequence:
        return generate(tokens, self.params, self.config, max_frames, self.layout, stop_threshold)
