"""
Generate a seeded token -> motion-primitive corpus
"""

import logging
from typing import List, Tuple

import numpy as np

from src.config import SynthConfig
from src.data_processing.pose import (
    ChannelLayout,
    Corpus,
    CorpusExample,
    PoseSequence,
    normalize_face_block,
)
from src.data_processing.primitives import PrimitiveBank
from src.data_processing.vocabulary import Vocabulary

logger = logging.getLogger(__name__)

FACE_MOTION_SCALE = 0.2  # landmark displacement relative to a unit face template


class SyntheticCorpusGenerator:
    """Build primitives, vocabulary and examples from one SynthConfig"""

    def __init__(self, config: SynthConfig):
        self.config = config
        self.layout: ChannelLayout = config.layout
        bank_seed, example_seed = np.random.SeedSequence(config.seed).spawn(2)
        self._bank_rng = np.random.default_rng(bank_seed)
        self._example_rng = np.random.default_rng(example_seed)

    def build_vocabulary(self) -> Vocabulary:
        """GLOSS01 .. GLOSSnn, id k <-> GLOSSk"""
        width = max(2, len(str(self.config.vocab_size)))
        return Vocabulary(f"GLOSS{k:0{width}d}" for k in range(1, self.config.vocab_size + 1))

    def _smooth_motion(self, columns: int) -> np.ndarray:
        """motif_len × columns mixture of two sinusoids per column"""
        t = np.linspace(0.0, 1.0, self.config.motif_len)[:, None]
        rng = self._bank_rng
        amp = rng.uniform(0.3, 1.0, size=(2, columns))
        freq = np.stack([rng.choice([0.5, 1.0], size=columns), rng.choice([1.5, 2.0], size=columns)])
        phase = rng.uniform(0.0, 2.0 * np.pi, size=(2, columns))
        return (amp[0] * np.sin(2.0 * np.pi * freq[0] * t + phase[0])
                + amp[1] * np.sin(2.0 * np.pi * freq[1] * t + phase[1]))

    def _face_template(self) -> np.ndarray:
        """Landmarks on an ellipse, flattened to 2·J_f values"""
        n = self.layout.face_landmarks
        angles = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
        return np.stack([0.5 * np.cos(angles), 0.6 * np.sin(angles)], axis=1).reshape(-1)

    def build_primitive_bank(self) -> PrimitiveBank:
        """
        One motif per (token, variant)

        A second variant is the mirror of the first around the token's
        resting offset, so averaging the two gives a flat, under-articulated
        motion. Homonym pairs copy one channel block from their partner.
        """
        cfg = self.config
        layout = self.layout
        motifs = np.zeros((cfg.vocab_size, cfg.variants_per_token, cfg.motif_len, layout.pose_dim))
        for k in range(cfg.vocab_size):
            offset = self._bank_rng.uniform(-0.5, 0.5, size=layout.pose_dim)
            motion = self._smooth_motion(layout.pose_dim)
            if layout.face_landmarks:
                face = slice(layout.manual_dim, layout.pose_dim)
                offset[face] = self._face_template()
                motion[:, face] *= FACE_MOTION_SCALE
            motifs[k, 0] = offset + motion
            if cfg.variants_per_token == 2:
                motifs[k, 1] = offset - motion

        pair = 0
        for _ in range(cfg.manual_homonym_pairs):
            motifs[2 * pair + 1, :, :, :layout.manual_dim] = motifs[2 * pair, :, :, :layout.manual_dim]
            pair += 1
        for _ in range(cfg.face_homonym_pairs):
            motifs[2 * pair + 1, :, :, layout.manual_dim:] = motifs[2 * pair, :, :, layout.manual_dim:]
            pair += 1

        token_ids = np.repeat(np.arange(1, cfg.vocab_size + 1), cfg.variants_per_token)
        variants = np.tile(np.arange(cfg.variants_per_token), cfg.vocab_size)
        return PrimitiveBank(token_ids, variants, motifs.reshape(-1, cfg.motif_len, layout.pose_dim), layout)

    def generate_examples(self, bank: PrimitiveBank) -> List[CorpusExample]:
        cfg = self.config
        rng = self._example_rng
        examples = []
        for i in range(cfg.n_examples):
            length = int(rng.integers(cfg.min_tokens, cfg.max_tokens + 1))
            tokens = tuple(int(t) for t in rng.integers(1, cfg.vocab_size + 1, size=length))
            variants = rng.integers(0, cfg.variants_per_token, size=length)
            values = np.concatenate([bank.motif(t, int(v)) for t, v in zip(tokens, variants)])
            values = values + rng.normal(0.0, cfg.noise_std, size=values.shape)
            flags: Tuple[str, ...] = ()
            if cfg.normalize_faces:
                values, degenerate = normalize_face_block(values, self.layout)
                if degenerate:
                    flags = ("degenerate_face",)
            target = PoseSequence.from_values(values, self.layout).validate()
            examples.append(CorpusExample(
                id=f"synth-{cfg.seed}-{i:05d}",
                source=tokens,
                target=target,
                provenance=f"synthetic:seed={cfg.seed}",
                flags=flags,
            ))
        return examples

    def generate_all(self) -> Tuple[Corpus, Vocabulary, PrimitiveBank]:
        logger.info(f"🏗️  Generating synthetic corpus: {self.config.n_examples} examples, "
                    f"{self.config.vocab_size} tokens, motif length {self.config.motif_len}")
        vocabulary = self.build_vocabulary()
        bank = self.build_primitive_bank()
        corpus = Corpus(self.generate_examples(bank), self.layout)
        limits = corpus.limits
        logger.info(f"✅ Corpus ready: U_max={limits.u_max}, T_max={limits.t_max}, "
                    f"pose_dim={self.layout.pose_dim}")
        return corpus, vocabulary, bank


def synth_corpus(config: SynthConfig) -> Tuple[Corpus, Vocabulary, PrimitiveBank]:
    """Deterministic synthetic corpus, its vocabulary and primitive bank"""
    return SyntheticCorpusGenerator(config).generate_all()
