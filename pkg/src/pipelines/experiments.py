"""
Ablation grid: regression vs adversarial training, and channel selections
trained both ways; every run is scored on the dev and test splits
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence, Union

import pandas as pd
from tqdm import tqdm

from src.config import RunConfig
from src.data_processing.generate_synthetic_data import synth_corpus
from src.data_processing.pose import Channels
from src.evaluation.evaluator import BackTranslationEvaluator, split_corpus
from src.pipelines.training import AdversarialTrainer, build_models
from src.utils.logging_setup import progress_enabled

logger = logging.getLogger(__name__)

RESULTS_FILE = "ablation.csv"
MEDIANS_FILE = "ablation_medians.csv"
GROUPS = ("adversarial", "channels")
SPLITS = ("dev", "test")
CHANNEL_LABELS = ((Channels.NONMANUAL, "Non-M"), (Channels.MANUAL, "M"), (Channels.BOTH, "M+Non-M"))


@dataclass(frozen=True)
class Variant:
    """One row label of the ablation tables and the settings it changes"""

    group: str
    name: str
    training: Dict[str, object] = field(default_factory=dict)
    discriminator: Dict[str, object] = field(default_factory=dict)


def build_variants(groups: Sequence[str]) -> List[Variant]:
    unknown = set(groups) - set(GROUPS)
    if unknown:
        raise ValueError(f"unknown ablation groups: {', '.join(sorted(unknown))}")
    variants = []
    if "adversarial" in groups:
        variants += [
            Variant("adversarial", "Regression", training={"use_discriminator": False}),
            Variant("adversarial", "Adversarial", discriminator={"conditioned": False}),
            Variant("adversarial", "Conditional Adv.", discriminator={"conditioned": True}),
        ]
    if "channels" in groups:
        # every channel selection trained both ways
        for channels, label in CHANNEL_LABELS:
            variants += [
                Variant("channels", f"Regression ({label})",
                        training={"channels": channels, "use_discriminator": False}),
                Variant("channels", f"Adversarial ({label})",
                        training={"channels": channels}, discriminator={"conditioned": True}),
            ]
    return variants


class AblationRunner:
    """Train and evaluate every variant for every seed"""

    def __init__(self, config: RunConfig, seeds: Sequence[int], groups: Sequence[str] = GROUPS):
        if not seeds:
            raise ValueError("at least one seed is required")
        self.config = config
        self.seeds = [int(s) for s in seeds]
        self.variants = build_variants(groups)

    def run_one(self, seed: int, variant: Variant, synthesized) -> Dict[str, object]:
        config = self.config.with_overrides(seed=seed)
        training = config.training.model_copy(update=variant.training)
        discriminator = config.discriminator.model_copy(update=variant.discriminator)
        corpus, vocabulary, bank = synthesized
        channels = Channels(training.channels)
        corpus, bank = corpus.project(channels), bank.project(channels)
        splits = split_corpus(corpus, seed)

        generator, disc = build_models(corpus, len(vocabulary), config.generator, discriminator, training)
        AdversarialTrainer(generator, disc, training).train(splits["train"])
        evaluator = BackTranslationEvaluator(bank, config.evaluation)

        row: Dict[str, object] = {"group": variant.group, "configuration": variant.name, "seed": seed}
        for split in SPLITS:
            report = evaluator.evaluate(generator, splits[split])
            row.update({f"{split}_{name}": value for name, value in report.summary().items()})
            row[f"{split}_generated_variance"] = report.generated_variance
            row[f"{split}_ground_truth_variance"] = report.ground_truth_variance
            row[f"{split}_variance_gap"] = abs(report.generated_variance - report.ground_truth_variance)
        return row

    def run(self) -> pd.DataFrame:
        rows = []
        total = len(self.seeds) * len(self.variants)
        logger.info(f"🧪 Ablation: {len(self.variants)} configurations × {len(self.seeds)} seeds")
        with tqdm(total=total, desc="Ablation runs", disable=not progress_enabled()) as bar:
            for seed in self.seeds:
                synthesized = synth_corpus(self.config.with_overrides(seed=seed).synth)
                for variant in self.variants:
                    rows.append(self.run_one(seed, variant, synthesized))
                    bar.update(1)
        return pd.DataFrame(rows)

    @staticmethod
    def medians(results: pd.DataFrame) -> pd.DataFrame:
        """Median of every score per configuration, in run order"""
        scores = results.drop(columns=["seed"])
        return scores.groupby(["group", "configuration"], sort=False).median(numeric_only=True).reset_index()

    def save(self, results: pd.DataFrame, out_dir: Union[str, Path]) -> Dict[str, Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        written = {"results": out_dir / RESULTS_FILE, "medians": out_dir / MEDIANS_FILE}
        results.to_csv(written["results"], index=False, float_format="%.10g")
        self.medians(results).to_csv(written["medians"], index=False, float_format="%.10g")
        logger.info(f"💾 Saved ablation results: {written['results']}")
        return written
