"""
Run configuration: pydantic models persisted as INI-style text
"""

import configparser
import io
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.data_processing.pose import ChannelLayout, Channels


class GanMode(str, Enum):
    NON_SATURATING = "non_saturating"
    MINIMAX_LITERAL = "minimax_literal"


class _Section(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid", use_enum_values=False)


class SynthConfig(_Section):
    """Synthetic token -> motion-primitive corpus"""

    vocab_size: int = Field(20, ge=2)
    motif_len: int = Field(10, ge=2)
    manual_joints: int = Field(4, ge=0)
    face_landmarks: int = Field(5, ge=0)
    nose_index: int = Field(0, ge=0)
    n_examples: int = Field(300, ge=1)
    min_tokens: int = Field(1, ge=1)
    max_tokens: int = Field(4, ge=1)
    noise_std: float = Field(0.01, ge=0.0)
    variants_per_token: int = Field(1, ge=1, le=2)
    manual_homonym_pairs: int = Field(0, ge=0)
    face_homonym_pairs: int = Field(0, ge=0)
    normalize_faces: bool = False
    seed: int = 0

    @model_validator(mode="after")
    def _check(self) -> "SynthConfig":
        if self.min_tokens > self.max_tokens:
            raise ValueError("min_tokens must not exceed max_tokens")
        if 2 * (self.manual_homonym_pairs + self.face_homonym_pairs) > self.vocab_size:
            raise ValueError("homonym pairs need two distinct tokens each")
        if self.manual_homonym_pairs and self.face_landmarks == 0:
            raise ValueError("manual homonyms need face landmarks to tell them apart")
        if self.face_homonym_pairs and self.manual_joints == 0:
            raise ValueError("face homonyms need manual joints to tell them apart")
        ChannelLayout(self.manual_joints, self.face_landmarks, self.nose_index)
        return self

    @property
    def layout(self) -> ChannelLayout:
        return ChannelLayout(self.manual_joints, self.face_landmarks, self.nose_index)


class GeneratorConfig(_Section):
    """Progressive transformer sizes; pose_dim and vocab_size are filled from the corpus"""

    layers: int = Field(2, ge=1)
    heads: int = Field(4, ge=1)
    embed_dim: int = Field(512, ge=1)
    feedforward_dim: int = Field(2048, ge=1)
    pose_dim: Optional[int] = Field(None, ge=1)
    vocab_size: Optional[int] = Field(None, ge=2)
    dropout: float = Field(0.1, ge=0.0, lt=1.0)
    stop_threshold: float = Field(0.98, gt=0.0, le=1.0)
    # counter column of decoder rows is zeroed unless set
    feed_counter: bool = False

    @model_validator(mode="after")
    def _check(self) -> "GeneratorConfig":
        if self.embed_dim % self.heads:
            raise ValueError(f"embed_dim {self.embed_dim} is not divisible by heads {self.heads}")
        return self

    @classmethod
    def desk(cls, **overrides) -> "GeneratorConfig":
        """Small profile that trains on one CPU core"""
        values = dict(layers=2, heads=2, embed_dim=32, feedforward_dim=64)
        values.update(overrides)
        return cls(**values)

    def resolved(self, pose_dim: int, vocab_size: int) -> "GeneratorConfig":
        return self.model_copy(update={"pose_dim": pose_dim, "vocab_size": vocab_size})


class DiscriminatorConfig(_Section):
    """Conditional 1D-CNN discriminator"""

    conv_layers: int = Field(3, ge=1)
    conv_features: int = Field(64, ge=1)
    filter_width: int = Field(10, ge=1)
    leaky_slope: float = Field(0.2, gt=0.0, lt=1.0)
    hidden_dim: int = Field(64, ge=1)
    conditioned: bool = True

    def min_length(self) -> int:
        """Shortest H that survives every valid convolution"""
        return self.conv_layers * (self.filter_width - 1) + 1


class TrainConfig(_Section):
    lambda_reg: float = Field(100.0, ge=0.0)
    lambda_gan: float = Field(0.001, ge=0.0)
    batch_size: int = Field(8, ge=1)
    epochs: int = Field(200, ge=1)
    lr: float = Field(1e-3, gt=0.0)
    seed: int = 0
    gan_mode: GanMode = GanMode.NON_SATURATING
    channels: Channels = Channels.BOTH
    use_discriminator: bool = True
    checkpoint_every: int = Field(0, ge=0)


class EvalConfig(_Section):
    split: str = Field("dev", pattern="^(train|dev|test)$")
    max_n: int = Field(4, ge=1)
    max_frames: Optional[int] = Field(None, ge=1)
    passthrough: bool = False


class PathsConfig(_Section):
    corpus_dir: str = "data/corpus"
    run_dir: str = "runs/default"

    @property
    def corpus_file(self) -> Path:
        return Path(self.corpus_dir) / "corpus.txt"

    @property
    def vocabulary_file(self) -> Path:
        return Path(self.corpus_dir) / "vocab.txt"

    @property
    def primitive_bank_file(self) -> Path:
        return Path(self.corpus_dir) / "primitive_bank.json"

    @property
    def metadata_file(self) -> Path:
        return Path(self.corpus_dir) / "metadata.json"

    @property
    def checkpoint_dir(self) -> Path:
        return Path(self.run_dir) / "checkpoints"

    @property
    def final_checkpoint(self) -> Path:
        return self.checkpoint_dir / "final.ckpt"

    @property
    def train_report_file(self) -> Path:
        return Path(self.run_dir) / "train_report.csv"


_SECTIONS = {
    "synth": SynthConfig,
    "generator": GeneratorConfig,
    "discriminator": DiscriminatorConfig,
    "training": TrainConfig,
    "evaluation": EvalConfig,
    "paths": PathsConfig,
}


class RunConfig(_Section):
    """Everything needed to reproduce a run"""

    seed: int = 0
    synth: SynthConfig = SynthConfig()
    generator: GeneratorConfig = GeneratorConfig.desk()
    discriminator: DiscriminatorConfig = DiscriminatorConfig()
    training: TrainConfig = TrainConfig()
    evaluation: EvalConfig = EvalConfig()
    paths: PathsConfig = PathsConfig()

    @model_validator(mode="before")
    @classmethod
    def _propagate_seed(cls, data: Any) -> Any:
        # the run seed is the default for section seeds that were not given
        if isinstance(data, dict) and "seed" in data:
            for section in ("synth", "training"):
                value = data.get(section)
                if isinstance(value, dict) and "seed" not in value:
                    data[section] = {**value, "seed": data["seed"]}
                elif value is None:
                    data[section] = {"seed": data["seed"]}
        return data

    # ------------------------------------------------------------------
    # Overrides
    # ------------------------------------------------------------------
    def with_overrides(self, seed: Optional[int] = None, lambda_gan: Optional[float] = None,
                       channels: Optional[Union[str, Channels]] = None) -> "RunConfig":
        """New config with command-line overrides applied"""
        config = self
        if seed is not None:
            config = config.model_copy(update={
                "seed": seed,
                "synth": config.synth.model_copy(update={"seed": seed}),
                "training": config.training.model_copy(update={"seed": seed}),
            })
        training_updates: Dict[str, Any] = {}
        if lambda_gan is not None:
            training_updates["lambda_gan"] = float(lambda_gan)
        if channels is not None:
            training_updates["channels"] = Channels.parse(channels) if isinstance(channels, str) else channels
        if training_updates:
            config = config.model_copy(update={
                "training": TrainConfig(**{**config.training.model_dump(), **training_updates})})
        return config

    # ------------------------------------------------------------------
    # INI persistence
    # ------------------------------------------------------------------
    def to_ini(self) -> str:
        parser = configparser.ConfigParser(interpolation=None)
        parser["run"] = {"seed": str(self.seed)}
        for name in _SECTIONS:
            section = getattr(self, name)
            parser[name] = {key: _format_value(value)
                            for key, value in section.model_dump().items() if value is not None}
        buffer = io.StringIO()
        parser.write(buffer)
        return buffer.getvalue()

    @classmethod
    def from_ini(cls, text: str) -> "RunConfig":
        parser = configparser.ConfigParser(interpolation=None)
        parser.read_string(text)
        unknown = set(parser.sections()) - set(_SECTIONS) - {"run"}
        if unknown:
            raise ValueError(f"unknown config sections: {', '.join(sorted(unknown))}")
        data: Dict[str, Any] = {}
        if parser.has_section("run"):
            data.update({k: v for k, v in parser["run"].items() if v != ""})
        for name in _SECTIONS:
            if parser.has_section(name):
                data[name] = {k: v for k, v in parser[name].items() if v != ""}
        return cls.model_validate(data)

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_ini(), encoding="utf-8")
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "RunConfig":
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"Config file not found: {path}")
        return cls.from_ini(path.read_text(encoding="utf-8"))


def _format_value(value: Any) -> str:
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, float):
        return repr(value)
    return str(value)
