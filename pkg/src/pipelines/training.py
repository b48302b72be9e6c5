"""
Joint generator / discriminator training
"""

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from tqdm import tqdm

from src.autodiff import AdamState, ParameterStore, adam_step, backward, load_checkpoint, save_checkpoint
from src.config import DiscriminatorConfig, GeneratorConfig, TrainConfig
from src.data_processing.pose import Channels, Corpus, CorpusExample
from src.errors import ContractError, TrainingDivergedError
from src.models.discriminator import ConditionalDiscriminator
from src.models.generator import ProgressiveTransformer
from src.pipelines.losses import adversarial_loss, discriminator_loss, example_regression_loss, generator_loss
from src.utils.logging_setup import progress_enabled

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ["epoch", "l_reg", "l_adv", "l_d", "dp_real", "dp_fake"]


def seed_streams(seed: int) -> Dict[str, np.random.Generator]:
    """Independent generators for initialisation, shuffling and dropout"""
    children = np.random.SeedSequence(seed).spawn(4)
    names = ("generator_init", "discriminator_init", "shuffle", "dropout")
    return {name: np.random.default_rng(child) for name, child in zip(names, children)}


def build_models(corpus: Corpus, vocab_size: int, generator_config: GeneratorConfig,
                 discriminator_config: DiscriminatorConfig,
                 train_config: TrainConfig) -> Tuple[ProgressiveTransformer, Optional[ConditionalDiscriminator]]:
    """
    Generator (and discriminator unless disabled) sized for ``corpus``

    ``corpus`` must already carry the channel selection of ``train_config``.
    """
    streams = seed_streams(train_config.seed)
    layout = corpus.layout
    generator = ProgressiveTransformer(generator_config.resolved(layout.pose_dim, vocab_size),
                                       streams["generator_init"], layout)
    discriminator = None
    if train_config.use_discriminator:
        discriminator = ConditionalDiscriminator(discriminator_config, layout.pose_dim, vocab_size,
                                                 corpus.limits, streams["discriminator_init"])
    return generator, discriminator


@dataclass
class EpochRecord:
    epoch: int
    l_reg: float
    l_adv: float
    l_d: float
    dp_real: float
    dp_fake: float
    seconds: float = 0.0


@dataclass
class TrainReport:
    """One record per epoch; wall-clock is kept in memory only"""

    records: List[EpochRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def wall_clock(self) -> float:
        return float(sum(r.seconds for r in self.records))

    @property
    def final(self) -> EpochRecord:
        return self.records[-1]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([{c: getattr(r, c) for c in REPORT_COLUMNS} for r in self.records],
                            columns=REPORT_COLUMNS)

    def save_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, float_format="%.10g")
        return path


class _EpochTotals:
    def __init__(self):
        self.count = 0
        self.l_reg = 0.0
        self.l_adv = 0.0
        self.l_d = 0.0
        self.dp_real = 0.0
        self.dp_fake = 0.0

    def record(self, epoch: int, seconds: float, has_discriminator: bool) -> EpochRecord:
        n = max(self.count, 1)
        missing = float("nan")
        return EpochRecord(
            epoch=epoch,
            l_reg=self.l_reg / n,
            l_adv=self.l_adv / n if has_discriminator else missing,
            l_d=self.l_d / n if has_discriminator else missing,
            dp_real=self.dp_real / n if has_discriminator else missing,
            dp_fake=self.dp_fake / n if has_discriminator else missing,
            seconds=seconds,
        )


class AdversarialTrainer:
    """
    Simultaneous per-batch updates of G and D

    Each batch: teacher-forced G forward, D loss on the real pair and the
    detached generated pair, then the generator loss with D's parameters
    frozen so the adversarial gradient reaches G only. One Adam step each.
    Without a discriminator the loop is plain regression training.
    """

    def __init__(self, generator: ProgressiveTransformer, discriminator: Optional[ConditionalDiscriminator],
                 config: TrainConfig, checkpoint_dir: Optional[Union[str, Path]] = None):
        self.generator = generator
        self.discriminator = discriminator
        self.config = config
        self.checkpoint_dir = Path(checkpoint_dir) if checkpoint_dir is not None else None
        streams = seed_streams(config.seed)
        self._shuffle_rng = streams["shuffle"]
        self._dropout_rng = streams["dropout"]
        self.g_state = AdamState(lr=config.lr)
        self.d_state = AdamState(lr=config.lr)

    # ------------------------------------------------------------------
    # Parameters and checkpoints
    # ------------------------------------------------------------------
    def state_dict(self) -> Dict[str, np.ndarray]:
        state = dict(self.generator.params.state_dict())
        if self.discriminator is not None:
            state.update(self.discriminator.params.state_dict())
        return state

    def save_checkpoint(self, path: Union[str, Path]) -> Path:
        return save_checkpoint(path, self.state_dict())

    def load_checkpoint(self, path: Union[str, Path]) -> None:
        arrays = load_checkpoint(path)
        self.generator.params.load_state_dict(arrays)
        if self.discriminator is not None:
            self.discriminator.params.load_state_dict(arrays)

    # ------------------------------------------------------------------
    # Training
    # ------------------------------------------------------------------
    def _prepare(self, corpus: Corpus) -> Corpus:
        if len(corpus) == 0:
            raise ContractError("cannot train on an empty corpus")
        channels = Channels(self.config.channels)
        if corpus.channels != channels:
            if corpus.channels != Channels.BOTH:
                raise ContractError(f"corpus holds {corpus.channels.value} columns, "
                                    f"training asks for {channels.value}")
            corpus = corpus.project(channels)
        if corpus.layout.pose_dim != self.generator.config.pose_dim:
            raise ContractError(f"corpus rows have {corpus.layout.pose_dim} values, "
                                f"generator produces {self.generator.config.pose_dim}")
        return corpus

    @staticmethod
    def _check_untouched(params: ParameterStore, before: Dict[str, Optional[np.ndarray]], side: str) -> None:
        for name, tensor in params.items():
            if tensor.grad is not before[name]:
                raise ContractError(f"{side} parameter '{name}' received a gradient from the other loss")

    def train_batch(self, batch: List[CorpusExample], epoch: int, index: int,
                    totals: _EpochTotals) -> None:
        g_params = self.generator.params
        size = len(batch)
        g_params.zero_grad()

        outputs = [self.generator.forward_teacher_forced(e, training=True, rng=self._dropout_rng)
                   for e in batch]
        l_regs = [example_regression_loss(e, out) for e, out in zip(batch, outputs)]

        d_fakes = None
        losses = {"l_reg": float(np.mean([l.item() for l in l_regs]))}
        if self.discriminator is not None:
            d_params = self.discriminator.params
            d_params.zero_grad()
            d_total = None
            for e, (poses, _) in zip(batch, outputs):
                d_real = self.discriminator(e.source, e.target.values)
                d_fake = self.discriminator(e.source, poses.detach())
                term = discriminator_loss(d_real, d_fake)
                d_total = term if d_total is None else d_total + term
                totals.dp_real += d_real.item()
                totals.dp_fake += d_fake.item()
            d_total = d_total * (1.0 / size)
            losses["l_d"] = d_total.item()
            g_before = {name: t.grad for name, t in g_params.items()}
            backward(d_total)
            self._check_untouched(g_params, g_before, "generator")

            with d_params.frozen():
                d_fakes = [self.discriminator(e.source, poses) for e, (poses, _) in zip(batch, outputs)]
            losses["l_adv"] = float(np.mean([adversarial_loss(d, self.config.gan_mode).item() for d in d_fakes]))
            totals.l_d += losses["l_d"] * size
            totals.l_adv += losses["l_adv"] * size

        g_total = None
        for i, (e, out) in enumerate(zip(batch, outputs)):
            term = generator_loss(e, out, d_fakes[i] if d_fakes is not None else None, self.config)
            g_total = term if g_total is None else g_total + term
        g_total = g_total * (1.0 / size)

        if not all(np.isfinite(v) for v in losses.values()) or not np.isfinite(g_total.item()):
            raise TrainingDivergedError(epoch, index, {**losses, "l_g": g_total.item()})

        if self.discriminator is not None:
            d_params = self.discriminator.params
            d_before = {name: t.grad for name, t in d_params.items()}
            backward(g_total)
            self._check_untouched(d_params, d_before, "discriminator")
            adam_step(g_params, self.g_state)
            adam_step(d_params, self.d_state)
        else:
            backward(g_total)
            adam_step(g_params, self.g_state)

        totals.l_reg += losses["l_reg"] * size
        totals.count += size

    def train(self, corpus: Corpus) -> TrainReport:
        corpus = self._prepare(corpus)
        cfg = self.config
        report = TrainReport()
        n_batches = int(np.ceil(len(corpus) / cfg.batch_size))
        logger.info(f"🏋️  Training on {len(corpus)} examples: {cfg.epochs} epochs, {n_batches} batches/epoch, "
                    f"λ_Reg={cfg.lambda_reg}, λ_GAN={cfg.lambda_gan}, "
                    f"discriminator={'on' if self.discriminator is not None else 'off'}")

        bar = tqdm(range(1, cfg.epochs + 1), desc="Epochs", disable=not progress_enabled())
        for epoch in bar:
            started = time.perf_counter()
            totals = _EpochTotals()
            order = self._shuffle_rng.permutation(len(corpus))
            for index in range(n_batches):
                batch = [corpus[int(i)] for i in order[index * cfg.batch_size:(index + 1) * cfg.batch_size]]
                self.train_batch(batch, epoch, index, totals)
            record = totals.record(epoch, time.perf_counter() - started, self.discriminator is not None)
            report.records.append(record)
            bar.set_postfix(l_reg=f"{record.l_reg:.4f}", l_d=f"{record.l_d:.3f}")
            logger.debug(f"epoch {epoch}: l_reg={record.l_reg:.6f} l_adv={record.l_adv:.6f} "
                         f"l_d={record.l_d:.6f} dp_real={record.dp_real:.3f} dp_fake={record.dp_fake:.3f}")

            if self.checkpoint_dir is not None and cfg.checkpoint_every and epoch % cfg.checkpoint_every == 0:
                self.save_checkpoint(self.checkpoint_dir / f"epoch-{epoch:04d}.ckpt")

        logger.info(f"✅ Training finished: l_reg={report.final.l_reg:.6f} after {cfg.epochs} epochs "
                    f"({report.wall_clock:.1f}s)")
        return report


def train(corpus: Corpus, generator: ProgressiveTransformer, discriminator: Optional[ConditionalDiscriminator],
          config: TrainConfig, checkpoint_dir: Optional[Union[str, Path]] = None) -> TrainReport:
    """Train ``generator`` (and ``discriminator``) in place"""
    return AdversarialTrainer(generator, discriminator, config, checkpoint_dir).train(corpus)
