"""
Command implementations behind run_pipeline.py
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

from src.autodiff import load_checkpoint
from src.config import RunConfig
from src.data_processing.corpus_io import load_corpus, save_corpus, save_metadata
from src.data_processing.generate_synthetic_data import synth_corpus
from src.data_processing.pose import Channels, Corpus, CorpusExample, PoseSequence
from src.data_processing.primitives import PrimitiveBank
from src.data_processing.vocabulary import Vocabulary
from src.evaluation.evaluator import BackTranslationEvaluator, split_corpus
from src.evaluation.metrics import MetricReport
from src.models.generator import ProgressiveTransformer
from src.pipelines.experiments import AblationRunner
from src.pipelines.training import AdversarialTrainer, TrainReport, build_models
from src.visualization.render import render_sequence_svg

logger = logging.getLogger(__name__)

RUN_CONFIG_FILE = "config.ini"


@dataclass
class CorpusBundle:
    """Corpus files of one synth run, projected to the training channels"""

    corpus: Corpus
    vocabulary: Vocabulary
    bank: PrimitiveBank

    @classmethod
    def load(cls, config: RunConfig) -> "CorpusBundle":
        paths = config.paths
        corpus = load_corpus(paths.corpus_file)
        vocabulary = Vocabulary.load(paths.vocabulary_file)
        bank = PrimitiveBank.load(paths.primitive_bank_file)
        channels = Channels(config.training.channels)
        return cls(corpus.project(channels), vocabulary, bank.project(channels))

    def splits(self, seed: int) -> Dict[str, Corpus]:
        return split_corpus(self.corpus, seed)


def _with_paths(config: RunConfig, corpus_dir: Optional[Union[str, Path]] = None,
                run_dir: Optional[Union[str, Path]] = None) -> RunConfig:
    updates = {}
    if corpus_dir is not None:
        updates["corpus_dir"] = str(corpus_dir)
    if run_dir is not None:
        updates["run_dir"] = str(run_dir)
    if not updates:
        return config
    return config.model_copy(update={"paths": config.paths.model_copy(update=updates)})


def load_generator(config: RunConfig, bundle: CorpusBundle,
                   checkpoint: Optional[Union[str, Path]] = None) -> ProgressiveTransformer:
    """Generator sized for the corpus with weights from ``checkpoint``"""
    training = config.training.model_copy(update={"use_discriminator": False})
    generator, _ = build_models(bundle.corpus, len(bundle.vocabulary), config.generator,
                                config.discriminator, training)
    path = Path(checkpoint) if checkpoint is not None else config.paths.final_checkpoint
    generator.params.load_state_dict(load_checkpoint(path))
    logger.info(f"📂 Loaded generator weights: {path}")
    return generator


# ----------------------------------------------------------------------
# synth
# ----------------------------------------------------------------------
def cmd_synth(config: RunConfig, out: Optional[Union[str, Path]] = None) -> Dict[str, Path]:
    """
    Write corpus, vocabulary, primitive bank and metadata

    Returns:
        Mapping of artifact name to written path
    """
    config = _with_paths(config, corpus_dir=out)
    paths = config.paths
    corpus, vocabulary, bank = synth_corpus(config.synth)
    written = {
        "corpus": save_corpus(corpus, paths.corpus_file),
        "vocabulary": vocabulary.save(paths.vocabulary_file),
        "primitive_bank": bank.save(paths.primitive_bank_file),
        "metadata": save_metadata(corpus, paths.metadata_file, seed=config.synth.seed,
                                  vocab_size=config.synth.vocab_size, motif_len=config.synth.motif_len),
    }
    limits = corpus.limits
    print(f"U_max={limits.u_max} T_max={limits.t_max}")
    return written


# ----------------------------------------------------------------------
# train
# ----------------------------------------------------------------------
def cmd_train(config: RunConfig, out: Optional[Union[str, Path]] = None) -> Tuple[TrainReport, Path]:
    """
    Train on the train split; write the report CSV and the final checkpoint

    Returns:
        (report, final checkpoint path)
    """
    config = _with_paths(config, run_dir=out)
    paths = config.paths
    bundle = CorpusBundle.load(config)
    train_split = bundle.splits(config.seed)["train"]

    generator, discriminator = build_models(bundle.corpus, len(bundle.vocabulary), config.generator,
                                            config.discriminator, config.training)
    trainer = AdversarialTrainer(generator, discriminator, config.training, paths.checkpoint_dir)
    report = trainer.train(train_split)

    config.save(Path(paths.run_dir) / RUN_CONFIG_FILE)
    report.save_csv(paths.train_report_file)
    final = trainer.save_checkpoint(paths.final_checkpoint)
    logger.info(f"💾 Saved report: {paths.train_report_file}")
    logger.info(f"💾 Saved checkpoint: {final}")
    return report, final


# ----------------------------------------------------------------------
# generate
# ----------------------------------------------------------------------
def read_token_lines(tokens_or_file: Union[str, Path]) -> List[str]:
    """A file holds one token sequence per line; anything else is one sequence"""
    candidate = Path(str(tokens_or_file))
    if candidate.is_file():
        lines = [line.strip() for line in candidate.read_text(encoding="utf-8").splitlines()]
        return [line for line in lines if line]
    return [str(tokens_or_file)]


def cmd_generate(config: RunConfig, tokens_or_file: Union[str, Path], out: Union[str, Path],
                 checkpoint: Optional[Union[str, Path]] = None, n_frames: int = 8) -> Dict[str, object]:
    """
    Produce pose sequences for token strings

    Writes ``out`` in corpus format and one SVG strip per sequence next to it.

    Raises:
        VocabularyError: a token is not in the vocabulary
    """
    bundle = CorpusBundle.load(config)
    sources = [bundle.vocabulary.encode(line) for line in read_token_lines(tokens_or_file)]
    generator = load_generator(config, bundle, checkpoint)
    max_frames = config.evaluation.max_frames or bundle.corpus.limits.u_max

    out = Path(out)
    sequences: List[PoseSequence] = []
    examples = []
    for i, source in enumerate(sources):
        seq = generator.generate(source, max_frames)
        sequences.append(seq)
        examples.append(CorpusExample(
            id=f"generated-{i:03d}",
            source=source,
            target=seq,
            provenance="generated",
            flags=("truncated",) if seq.truncated else (),
        ))
        logger.info(f"🎬 {' '.join(bundle.vocabulary.decode(source))}: {len(seq)} frames"
                    f"{' (truncated)' if seq.truncated else ''}")

    corpus_path = save_corpus(Corpus(examples, bundle.corpus.layout, bundle.corpus.channels), out)
    if len(sequences) == 1:
        svg_paths = [out.with_suffix(".svg")]
    else:
        svg_paths = [out.with_name(f"{out.stem}-{i:03d}.svg") for i in range(len(sequences))]
    for seq, example, svg in zip(sequences, examples, svg_paths):
        render_sequence_svg(seq, svg, n_frames, title=" ".join(bundle.vocabulary.decode(example.source)))
    return {"corpus": corpus_path, "svg": svg_paths, "sequences": sequences}


# ----------------------------------------------------------------------
# eval
# ----------------------------------------------------------------------
def cmd_eval(config: RunConfig, checkpoint: Optional[Union[str, Path]] = None, split: Optional[str] = None,
             out: Optional[Union[str, Path]] = None, passthrough: Optional[bool] = None) -> MetricReport:
    """
    Back-translation scores of one split; writes CSV and a text table, prints BLEU-4
    """
    evaluation = config.evaluation
    if split is not None:
        evaluation = evaluation.model_copy(update={"split": split})
    if passthrough is not None:
        evaluation = evaluation.model_copy(update={"passthrough": passthrough})

    bundle = CorpusBundle.load(config)
    corpus = bundle.splits(config.seed)[evaluation.split]
    generator = None if evaluation.passthrough else load_generator(config, bundle, checkpoint)
    report = BackTranslationEvaluator(bundle.bank, evaluation).evaluate(generator, corpus)

    out_dir = Path(out) if out is not None else Path(config.paths.run_dir)
    stem = f"eval_{evaluation.split}{'_passthrough' if evaluation.passthrough else ''}"
    report.save_csv(out_dir / f"{stem}.csv")
    (out_dir / f"{stem}.txt").write_text(report.to_table() + "\n", encoding="utf-8")
    print(f"BLEU-4={report.bleu_4:.4f}")
    return report


def cmd_ablate(config: RunConfig, seeds: Sequence[int], out: Optional[Union[str, Path]] = None,
               groups: Sequence[str] = ("adversarial", "channels")):
    """Run the ablation grid and print the per-configuration medians"""
    out_dir = Path(out) if out is not None else Path(config.paths.run_dir) / "ablation"
    runner = AblationRunner(config, seeds, groups)
    results = runner.run()
    written = runner.save(results, out_dir)
    medians = runner.medians(results)
    print(medians.to_string(index=False, float_format=lambda v: f"{v:.4f}"))
    return results, written
