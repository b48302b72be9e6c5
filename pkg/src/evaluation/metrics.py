"""
BLEU, ROUGE-L and articulation metrics over token and pose sequences
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from nltk.translate.bleu_score import brevity_penalty, closest_ref_length, modified_precision

Tokens = Sequence[int]


def _corpus_counts(hypotheses: Sequence[Tokens], references: Sequence[Sequence[Tokens]],
                   max_n: int) -> Tuple[np.ndarray, np.ndarray, int, int]:
    """Clipped matches and totals per order, hypothesis and reference lengths"""
    if len(hypotheses) != len(references):
        raise ValueError(f"{len(hypotheses)} hypotheses but {len(references)} reference lists")
    matches = np.zeros(max_n, dtype=np.int64)
    totals = np.zeros(max_n, dtype=np.int64)
    hyp_len = ref_len = 0
    for hyp, refs in zip(hypotheses, references):
        if not refs:
            raise ValueError("every hypothesis needs at least one reference")
        hyp, refs = list(hyp), [list(r) for r in refs]
        hyp_len += len(hyp)
        ref_len += closest_ref_length(refs, len(hyp))
        for n in range(1, max_n + 1):
            # nltk floors the denominator at 1; a hypothesis shorter than n has no n-grams
            count = max(len(hyp) - n + 1, 0)
            matches[n - 1] += int(modified_precision(refs, hyp, n) * count)
            totals[n - 1] += count
    return matches, totals, hyp_len, ref_len


def corpus_bleu(hypotheses: Sequence[Tokens], references: Sequence[Sequence[Tokens]],
                max_n: int = 4) -> List[float]:
    """
    Corpus BLEU-1 .. BLEU-max_n

    Clipped n-gram counts (nltk ``modified_precision``) are summed over all
    examples before the precisions are formed; BLEU-k is nltk's brevity
    penalty times the geometric mean of precisions 1..k, and 0 when any of
    them is 0. Hypotheses shorter than k add nothing to the k-gram totals,
    so ground-truth sentences of any length score 1.0.

    Args:
        hypotheses: One token sequence per example
        references: One list of reference sequences per example
        max_n: Highest n-gram order

    Returns:
        [bleu_1, ..., bleu_max_n], each in [0, 1]
    """
    if max_n < 1:
        raise ValueError(f"max_n must be >= 1, got {max_n}")
    matches, totals, hyp_len, ref_len = _corpus_counts(hypotheses, references, max_n)
    if hyp_len == 0:
        return [0.0] * max_n

    penalty = brevity_penalty(ref_len, hyp_len)
    scores = []
    log_sum = 0.0
    for n in range(max_n):
        if matches[n] == 0 or totals[n] == 0:
            scores.extend([0.0] * (max_n - n))
            break
        log_sum += np.log(matches[n] / totals[n])
        scores.append(float(penalty * np.exp(log_sum / (n + 1))))
    return scores


def bleu(hypothesis: Tokens, references: Sequence[Tokens], max_n: int = 4) -> List[float]:
    """Sentence BLEU: corpus_bleu over a single example"""
    return corpus_bleu([hypothesis], [references], max_n)


def lcs_length(a: Tokens, b: Tokens) -> int:
    """Longest common subsequence by dynamic programming"""
    if not a or not b:
        return 0
    previous = [0] * (len(b) + 1)
    for x in a:
        current = [0]
        for j, y in enumerate(b, 1):
            current.append(previous[j - 1] + 1 if x == y else max(previous[j], current[j - 1]))
        previous = current
    return previous[-1]


def rouge_l(hypothesis: Tokens, reference: Tokens) -> float:
    """ROUGE-L F1 (β = 1); 0 when either side is empty"""
    lcs = lcs_length(hypothesis, reference)
    if lcs == 0:
        return 0.0
    precision = lcs / len(hypothesis)
    recall = lcs / len(reference)
    return 2.0 * precision * recall / (precision + recall)


def token_recovery(hypothesis: Tokens, reference: Tokens) -> float:
    """Share of reference positions reproduced at the same position"""
    if not reference:
        return 1.0 if not hypothesis else 0.0
    hits = sum(1 for h, r in zip(hypothesis, reference) if h == r)
    return hits / len(reference)


def temporal_variance(values: np.ndarray) -> float:
    """Per-column variance over time, averaged over columns"""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2 or values.shape[0] == 0:
        raise ValueError(f"expected a non-empty frames × columns array, got shape {values.shape}")
    return float(values.var(axis=0).mean())


@dataclass
class MetricReport:
    """Back-translation scores of one evaluated split"""

    bleu_scores: List[float]
    rouge_l_f1: float
    token_recovery: List[float] = field(default_factory=list)
    generated_variance: float = float("nan")
    ground_truth_variance: float = float("nan")

    @property
    def max_n(self) -> int:
        return len(self.bleu_scores)

    def bleu_at(self, n: int) -> float:
        return self.bleu_scores[n - 1] if 1 <= n <= self.max_n else float("nan")

    @property
    def bleu_1(self) -> float:
        return self.bleu_at(1)

    @property
    def bleu_2(self) -> float:
        return self.bleu_at(2)

    @property
    def bleu_3(self) -> float:
        return self.bleu_at(3)

    @property
    def bleu_4(self) -> float:
        return self.bleu_at(4)

    @property
    def mean_token_recovery(self) -> float:
        return float(np.mean(self.token_recovery)) if self.token_recovery else float("nan")

    def summary(self) -> Dict[str, float]:
        """Table columns, highest BLEU order first, then ROUGE"""
        row = {f"BLEU-{n}": self.bleu_at(n) for n in range(self.max_n, 0, -1)}
        row["ROUGE"] = self.rouge_l_f1
        return row

    def to_frame(self) -> pd.DataFrame:
        row = self.summary()
        row.update({
            "token_recovery": self.mean_token_recovery,
            "generated_variance": self.generated_variance,
            "ground_truth_variance": self.ground_truth_variance,
        })
        return pd.DataFrame([row])

    def to_table(self) -> str:
        return pd.DataFrame([self.summary()]).to_string(index=False, float_format=lambda v: f"{v:.4f}")

    def save_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, float_format="%.10g")
        return path
