"""
Back-translation oracle, BLEU / ROUGE-L and split evaluation
"""

import math
from itertools import combinations

import numpy as np
import pandas as pd
import pytest
from nltk.translate.bleu_score import corpus_bleu as nltk_corpus_bleu

from src.config import EvalConfig, SynthConfig
from src.data_processing.generate_synthetic_data import synth_corpus
from src.data_processing.pose import ChannelLayout, Channels
from src.data_processing.primitives import PrimitiveBank
from src.errors import ContractError
from src.evaluation.back_translation import back_translate_oracle
from src.evaluation.evaluator import BackTranslationEvaluator, evaluate_model, split_corpus
from src.evaluation.metrics import (
    MetricReport,
    bleu,
    corpus_bleu,
    lcs_length,
    rouge_l,
    temporal_variance,
    token_recovery,
)
from src.models.generator import ProgressiveTransformer

A, B, C, D, E = 1, 2, 3, 4, 5


def _bleu_by_counting(hypotheses, references, max_n):
    """Clipped n-gram counting written out loop by loop"""
    matches, totals = [0] * max_n, [0] * max_n
    hyp_len = ref_len = 0
    for hyp, refs in zip(hypotheses, references):
        hyp_len += len(hyp)
        ref_len += min((abs(len(r) - len(hyp)), len(r)) for r in refs)[1]
        for n in range(1, max_n + 1):
            grams = [tuple(hyp[i:i + n]) for i in range(len(hyp) - n + 1)]
            for gram in set(grams):
                ceiling = max(sum(1 for i in range(len(r) - n + 1) if tuple(r[i:i + n]) == gram) for r in refs)
                matches[n - 1] += min(grams.count(gram), ceiling)
            totals[n - 1] += len(grams)
    if hyp_len == 0:
        return [0.0] * max_n
    penalty = 1.0 if hyp_len > ref_len else math.exp(1.0 - ref_len / hyp_len)
    scores, product = [], 1.0
    for n in range(max_n):
        if matches[n] == 0 or totals[n] == 0:
            return scores + [0.0] * (max_n - n)
        product *= matches[n] / totals[n]
        scores.append(penalty * product ** (1.0 / (n + 1)))
    return scores


@pytest.fixture
def long_corpus():
    """Every source has at least four tokens, so 4-gram totals are never empty"""
    return synth_corpus(SynthConfig(vocab_size=6, motif_len=4, manual_joints=2, face_landmarks=3,
                                    n_examples=10, min_tokens=4, max_tokens=5, seed=1))


class TestBleu:

    def test_one_substitution(self):
        scores = bleu([A, B, C, D], [[A, B, C, E]])
        assert scores[0] == pytest.approx(0.75)
        assert scores[1] == pytest.approx(math.sqrt(0.75 * 2 / 3))
        assert scores[2] == pytest.approx((0.75 * 2 / 3 * 0.5) ** (1 / 3))
        assert scores[3] == 0.0

    def test_identical_sequences(self):
        assert bleu([A, B, C, D, E], [[A, B, C, D, E]]) == pytest.approx([1.0] * 4)

    def test_brevity_penalty(self):
        scores = bleu([A, B], [[A, B, A, B]], max_n=2)
        assert scores[0] == pytest.approx(math.exp(-1))
        assert scores[1] == pytest.approx(math.exp(-1))

    def test_clipping(self):
        assert bleu([A, A, A, A], [[A, B, C, D]], max_n=1)[0] == pytest.approx(0.25)

    def test_closest_reference_length(self):
        # hypothesis of 3 tokens; the 3-token reference removes the penalty
        scores = bleu([A, B, C], [[A, B, C, D, E], [C, B, A]], max_n=1)
        assert scores[0] == pytest.approx(1.0)

    def test_corpus_level_aggregation(self):
        scores = corpus_bleu([[A, B], [C, D]], [[[A, B]], [[C, E]]], max_n=1)
        assert scores[0] == pytest.approx(0.75)

    def test_empty_hypotheses(self):
        assert corpus_bleu([[], []], [[[A]], [[B]]]) == [0.0] * 4

    def test_every_hypothesis_needs_references(self):
        with pytest.raises(ValueError):
            corpus_bleu([[A]], [[]])

    def test_short_hypotheses_do_not_dilute_higher_orders(self):
        # single-token sentences have no 2-grams to miss
        scores = corpus_bleu([[A], [B, C]], [[[A]], [[B, C]]], max_n=2)
        assert scores == pytest.approx([1.0, 1.0])

    def test_matches_counting_by_hand_on_random_cases(self, rng):
        for _ in range(100):
            size = int(rng.integers(1, 4))
            hypotheses = [rng.integers(1, 5, size=rng.integers(0, 8)).tolist() for _ in range(size)]
            references = [[rng.integers(1, 5, size=rng.integers(1, 8)).tolist()
                           for _ in range(rng.integers(1, 3))] for _ in range(size)]
            expected = _bleu_by_counting(hypotheses, references, 4)
            assert corpus_bleu(hypotheses, references) == pytest.approx(expected, abs=1e-12)

    def test_agrees_with_nltk_corpus_bleu(self, rng):
        compared = 0
        for _ in range(50):
            hypotheses = [rng.integers(1, 3, size=rng.integers(4, 9)).tolist() for _ in range(4)]
            references = [[rng.integers(1, 3, size=rng.integers(4, 9)).tolist()] for _ in range(4)]
            ours = corpus_bleu(hypotheses, references)
            if min(ours) == 0.0:
                continue
            compared += 1
            for n in range(1, 5):
                theirs = nltk_corpus_bleu(references, hypotheses, weights=(1.0 / n,) * n)
                assert ours[n - 1] == pytest.approx(theirs, rel=1e-9)
        assert compared > 25


class TestRougeAndRecovery:

    def test_swapped_pair(self):
        assert lcs_length([A, B, C], [A, C, B]) == 2
        assert rouge_l([A, B, C], [A, C, B]) == pytest.approx(2 / 3)

    def test_disjoint_and_empty(self):
        assert rouge_l([A, B], [C, D]) == 0.0
        assert rouge_l([], [A]) == 0.0

    def test_lcs_against_brute_force(self, rng):
        for _ in range(30):
            a = rng.integers(1, 4, size=rng.integers(0, 6)).tolist()
            b = rng.integers(1, 4, size=rng.integers(0, 6)).tolist()
            subsequences = {tuple(a[i] for i in idx) for k in range(len(a) + 1)
                            for idx in combinations(range(len(a)), k)}

            def is_subsequence(s, seq):
                it = iter(seq)
                return all(any(x == y for y in it) for x in s)

            best = max(len(s) for s in subsequences if is_subsequence(s, b))
            assert lcs_length(a, b) == best

    def test_token_recovery_is_positional(self):
        assert token_recovery([A, B, C], [A, C, C]) == pytest.approx(2 / 3)
        assert token_recovery([B, C], [A, B, C]) == 0.0

    def test_temporal_variance(self):
        assert temporal_variance(np.zeros((4, 3))) == 0.0
        assert temporal_variance(np.array([[0.0, 1.0], [2.0, 1.0]])) == pytest.approx(0.5)
        with pytest.raises(ValueError):
            temporal_variance(np.zeros((0, 3)))


class TestOracle:

    @staticmethod
    def _random_bank(rng, entries=5, motif_len=4, layout=ChannelLayout(1, 1)):
        return PrimitiveBank(np.arange(1, entries + 1), np.zeros(entries, dtype=np.int64),
                             rng.normal(size=(entries, motif_len, layout.pose_dim)), layout)

    def test_matches_a_brute_force_search(self, rng):
        for _ in range(100):
            bank = self._random_bank(rng)
            frames = int(rng.integers(1, 15))
            poses = rng.normal(size=(frames, bank.layout.pose_dim))
            expected = []
            for start in range(0, frames, bank.motif_len):
                window = poses[start:start + bank.motif_len]
                if 2 * len(window) < bank.motif_len:
                    break
                best, best_distance = None, np.inf
                for k in range(len(bank)):
                    distance = np.mean((bank.motifs[k, :len(window)] - window) ** 2)
                    if distance < best_distance:
                        best, best_distance = int(bank.token_ids[k]), distance
                expected.append(best)
            assert back_translate_oracle(poses, bank) == tuple(expected)

    def test_recovers_sources_from_clean_corpus(self):
        corpus, _, bank = synth_corpus(SynthConfig(vocab_size=6, motif_len=4, manual_joints=2,
                                                   face_landmarks=3, n_examples=20, noise_std=0.0))
        for example in corpus:
            assert back_translate_oracle(example.target, bank) == example.source

    def test_recovers_sources_under_noise(self, tiny_corpus):
        corpus, _, bank = tiny_corpus
        for example in corpus:
            assert back_translate_oracle(example.target, bank) == example.source

    def test_mirrored_variants_decode_to_their_token(self):
        corpus, _, bank = synth_corpus(SynthConfig(vocab_size=4, motif_len=6, manual_joints=2,
                                                   face_landmarks=3, n_examples=15, variants_per_token=2))
        for example in corpus:
            assert back_translate_oracle(example.target, bank) == example.source

    def test_short_tail_is_dropped(self, tiny_corpus):
        _, _, bank = tiny_corpus
        poses = np.vstack([bank.motif(2), bank.motif(3)[:1]])
        assert back_translate_oracle(poses, bank) == (2,)
        poses = np.vstack([bank.motif(2), bank.motif(3)[:2]])
        assert back_translate_oracle(poses, bank) == (2, 3)

    def test_all_zero_input_is_deterministic(self, tiny_corpus):
        _, _, bank = tiny_corpus
        zeros = np.zeros((3 * bank.motif_len, bank.layout.pose_dim))
        first = back_translate_oracle(zeros, bank)
        assert first == back_translate_oracle(zeros, bank)
        assert len(first) == 3 and len(set(first)) == 1

    def test_empty_input(self, tiny_corpus):
        assert back_translate_oracle(np.zeros((0, 12)), tiny_corpus[2]) == ()

    def test_width_and_window_mismatch(self, tiny_corpus):
        bank = tiny_corpus[2]
        with pytest.raises(ContractError):
            back_translate_oracle(np.zeros((4, 5)), bank)
        with pytest.raises(ContractError):
            back_translate_oracle(np.zeros((4, 12)), bank, motif_len=3)


class TestSplits:

    def test_split_sizes_and_disjointness(self, tiny_corpus):
        corpus = tiny_corpus[0]
        splits = split_corpus(corpus, seed=0)
        ids = {name: [e.id for e in split] for name, split in splits.items()}
        assert sum(len(v) for v in ids.values()) == len(corpus)
        assert len(ids["train"]) == 9
        assert not set(ids["train"]) & (set(ids["dev"]) | set(ids["test"]))
        assert not set(ids["dev"]) & set(ids["test"])
        for split in splits.values():
            assert split.limits == corpus.limits

    def test_split_is_seeded(self, tiny_corpus):
        corpus = tiny_corpus[0]
        a = [e.id for e in split_corpus(corpus, seed=3)["dev"]]
        b = [e.id for e in split_corpus(corpus, seed=3)["dev"]]
        assert a == b

    def test_two_examples_share_dev_and_test(self, tiny_corpus):
        corpus = tiny_corpus[0].subset([0, 1])
        splits = split_corpus(corpus, seed=0)
        assert len(splits["train"]) == 1
        assert [e.id for e in splits["dev"]] == [e.id for e in splits["test"]]

    def test_single_example(self, tiny_corpus):
        with pytest.raises(ContractError):
            split_corpus(tiny_corpus[0].subset([0]), seed=0)


class TestEvaluator:

    def test_passthrough_scores_are_perfect(self, long_corpus):
        corpus, _, bank = long_corpus
        report = evaluate_model(None, corpus, bank, passthrough=True)
        assert report.bleu_4 == pytest.approx(1.0)
        assert report.rouge_l_f1 == pytest.approx(1.0)
        assert report.mean_token_recovery == pytest.approx(1.0)
        assert report.generated_variance == pytest.approx(report.ground_truth_variance)

    def test_passthrough_on_projected_channels(self, long_corpus):
        corpus, _, bank = long_corpus
        report = BackTranslationEvaluator(bank).evaluate(None, corpus.project(Channels.MANUAL), passthrough=True)
        assert report.bleu_1 == pytest.approx(1.0)

    def test_untrained_generator_scores_at_chance(self, tiny_generator_config):
        corpus, vocab, bank = synth_corpus(SynthConfig(vocab_size=20, motif_len=4, manual_joints=2,
                                                       face_landmarks=3, n_examples=12, min_tokens=4,
                                                       max_tokens=5, seed=2))
        config = tiny_generator_config.resolved(corpus.layout.pose_dim, len(vocab))
        generator = ProgressiveTransformer(config, seed=0, layout=corpus.layout)
        report = evaluate_model(generator, corpus, bank)
        assert report.bleu_4 < 0.05
        assert 0.0 <= report.rouge_l_f1 <= 1.0

    def test_generator_required_without_passthrough(self, long_corpus):
        corpus, _, bank = long_corpus
        with pytest.raises(ContractError):
            evaluate_model(None, corpus, bank)

    def test_report_columns(self, tmp_path):
        report = MetricReport([0.9, 0.8, 0.7, 0.6], 0.85, [1.0, 0.5], 0.1, 0.2)
        assert list(report.summary()) == ["BLEU-4", "BLEU-3", "BLEU-2", "BLEU-1", "ROUGE"]
        assert report.mean_token_recovery == pytest.approx(0.75)
        assert report.to_table().splitlines()[0].split() == ["BLEU-4", "BLEU-3", "BLEU-2", "BLEU-1", "ROUGE"]
        frame = pd.read_csv(report.save_csv(tmp_path / "scores.csv"))
        assert frame.loc[0, "BLEU-4"] == pytest.approx(0.6)
        assert frame.loc[0, "ROUGE"] == pytest.approx(0.85)
