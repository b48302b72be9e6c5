"""
Back-translation evaluation of a trained generator on a held-out split
"""

import logging
from typing import Dict, Optional

import numpy as np
from sklearn.model_selection import train_test_split
from tqdm import tqdm

from src.config import EvalConfig
from src.data_processing.pose import Corpus
from src.data_processing.primitives import PrimitiveBank
from src.errors import ContractError
from src.evaluation.back_translation import back_translate_oracle
from src.evaluation.metrics import MetricReport, corpus_bleu, rouge_l, temporal_variance, token_recovery
from src.models.generator import ProgressiveTransformer
from src.utils.logging_setup import progress_enabled

logger = logging.getLogger(__name__)

SPLIT_NAMES = ("train", "dev", "test")


def split_corpus(corpus: Corpus, seed: int) -> Dict[str, Corpus]:
    """
    Seeded 80/10/10 train/dev/test split

    Examples keep their corpus order inside each split, and every split
    keeps the limits of the full corpus. With fewer than two held-out
    examples dev and test share them.
    """
    if len(corpus) < 2:
        raise ContractError(f"cannot split a corpus of {len(corpus)} example(s)")
    indices = np.arange(len(corpus))
    train_idx, held_out = train_test_split(indices, test_size=0.2, random_state=seed, shuffle=True)
    if len(held_out) < 2:
        dev_idx = test_idx = held_out
    else:
        dev_idx, test_idx = train_test_split(held_out, test_size=0.5, random_state=seed, shuffle=True)
    return {name: corpus.subset(sorted(int(i) for i in idx))
            for name, idx in zip(SPLIT_NAMES, (train_idx, dev_idx, test_idx))}


class BackTranslationEvaluator:
    """Generate, decode with the primitive oracle, score against the sources"""

    def __init__(self, bank: PrimitiveBank, config: EvalConfig = EvalConfig()):
        self.bank = bank
        self.config = config

    def _bank_for(self, corpus: Corpus) -> PrimitiveBank:
        if self.bank.layout.pose_dim == corpus.layout.pose_dim:
            return self.bank
        return self.bank.project(corpus.channels)

    def evaluate(self, generator: Optional[ProgressiveTransformer], corpus: Corpus,
                 passthrough: Optional[bool] = None) -> MetricReport:
        """
        Score ``generator`` on ``corpus``

        Args:
            generator: Trained model; may be None in passthrough mode
            corpus: Held-out split, already projected to the model's channels
            passthrough: Decode the ground-truth poses instead of generating

        Returns:
            Corpus BLEU-1..max_n, mean ROUGE-L, per-example token recovery
        """
        passthrough = self.config.passthrough if passthrough is None else passthrough
        if not passthrough and generator is None:
            raise ContractError("a generator is required unless passthrough is set")
        if len(corpus) == 0:
            raise ContractError("cannot evaluate an empty split")
        bank = self._bank_for(corpus)
        max_frames = self.config.max_frames or corpus.limits.u_max

        hypotheses, references = [], []
        rouges, recoveries, gen_var, true_var = [], [], [], []
        mode = "ground truth" if passthrough else "generated"
        for example in tqdm(corpus, desc=f"Evaluating ({mode})", disable=not progress_enabled()):
            if passthrough:
                poses = example.target.values
            else:
                poses = generator.generate(example.source, max_frames).values
            hypothesis = back_translate_oracle(poses, bank)
            hypotheses.append(hypothesis)
            references.append([example.source])
            rouges.append(rouge_l(hypothesis, example.source))
            recoveries.append(token_recovery(hypothesis, example.source))
            gen_var.append(temporal_variance(poses))
            true_var.append(temporal_variance(example.target.values))

        report = MetricReport(
            bleu_scores=corpus_bleu(hypotheses, references, self.config.max_n),
            rouge_l_f1=float(np.mean(rouges)),
            token_recovery=recoveries,
            generated_variance=float(np.mean(gen_var)),
            ground_truth_variance=float(np.mean(true_var)),
        )
        logger.info(f"📊 {len(corpus)} examples: BLEU-{report.max_n}={report.bleu_at(report.max_n):.4f}, "
                    f"ROUGE-L={report.rouge_l_f1:.4f}")
        return report


def evaluate_model(generator: Optional[ProgressiveTransformer], corpus: Corpus, bank: PrimitiveBank,
                   config: EvalConfig = EvalConfig(), passthrough: Optional[bool] = None) -> MetricReport:
    return BackTranslationEvaluator(bank, config).evaluate(generator, corpus, passthrough)
