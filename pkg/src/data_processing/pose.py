"""
Pose data model: channel layout, frames, sequences and corpus examples
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from src.errors import ContractError

TokenSequence = Tuple[int, ...]

MANUAL_COORDS = 3  # x, y, z per body/hand joint
FACE_COORDS = 2    # x, y per facial landmark


class Channels(str, Enum):
    """Which pose columns take part in training and evaluation"""

    MANUAL = "manual_only"
    NONMANUAL = "nonmanual_only"
    BOTH = "both"

    @classmethod
    def parse(cls, value: str) -> "Channels":
        aliases = {"manual": cls.MANUAL, "nonmanual": cls.NONMANUAL, "non-manual": cls.NONMANUAL}
        if value in aliases:
            return aliases[value]
        return cls(value)


@dataclass(frozen=True)
class ChannelLayout:
    """Column layout of a pose row: [manual block | face block]"""

    manual_joints: int
    face_landmarks: int
    nose_index: int = 0

    def __post_init__(self):
        if self.manual_joints < 0 or self.face_landmarks < 0:
            raise ContractError("joint counts must be non-negative")
        if self.manual_joints + self.face_landmarks < 1:
            raise ContractError("a layout needs at least one joint or landmark")
        if self.face_landmarks and not 0 <= self.nose_index < self.face_landmarks:
            raise ContractError(
                f"nose_index {self.nose_index} outside {self.face_landmarks} face landmarks")

    @classmethod
    def for_width(cls, pose_dim: int) -> "ChannelLayout":
        """Layout with as many manual joints as a row of ``pose_dim`` values allows"""
        for joints in range(pose_dim // MANUAL_COORDS, -1, -1):
            rest = pose_dim - MANUAL_COORDS * joints
            if rest % FACE_COORDS == 0:
                return cls(joints, rest // FACE_COORDS)
        raise ContractError(f"no manual/face split produces {pose_dim} columns")

    @property
    def manual_dim(self) -> int:
        return MANUAL_COORDS * self.manual_joints

    @property
    def face_dim(self) -> int:
        return FACE_COORDS * self.face_landmarks

    @property
    def pose_dim(self) -> int:
        return self.manual_dim + self.face_dim

    @property
    def manual_columns(self) -> np.ndarray:
        return np.arange(self.manual_dim)

    @property
    def face_columns(self) -> np.ndarray:
        return np.arange(self.manual_dim, self.pose_dim)

    def split(self, values: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Inverse of concat_channels"""
        values = np.asarray(values)
        if values.shape[-1] != self.pose_dim:
            raise ContractError(f"rows have {values.shape[-1]} columns, layout needs {self.pose_dim}")
        return values[..., :self.manual_dim], values[..., self.manual_dim:]


@dataclass(frozen=True)
class PoseFrame:
    """One time step: pose values and the progress counter"""

    values: np.ndarray
    counter: float


@dataclass(frozen=True)
class PoseSequence:
    """
    Frames of one utterance stored column-wise

    values is U × pose_dim, counters has length U. Corpus sequences have
    non-decreasing counters in [0, 1]; generated sequences keep whatever
    the counter head predicted and may be marked truncated.
    """

    values: np.ndarray
    counters: np.ndarray
    layout: ChannelLayout
    truncated: bool = False

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        counters = np.asarray(self.counters, dtype=np.float64).reshape(-1)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "counters", counters)
        if values.ndim != 2 or values.shape[0] < 1:
            raise ContractError(f"a pose sequence needs at least one frame, got shape {values.shape}")
        if values.shape[1] != self.layout.pose_dim:
            raise ContractError(
                f"frames have {values.shape[1]} values, layout needs {self.layout.pose_dim}")
        if counters.shape[0] != values.shape[0]:
            raise ContractError(f"{counters.shape[0]} counters for {values.shape[0]} frames")

    @classmethod
    def from_values(cls, values: np.ndarray, layout: ChannelLayout) -> "PoseSequence":
        """Sequence with the linear counter ramp of a ground-truth target"""
        values = np.asarray(values, dtype=np.float64)
        return cls(values, counter_targets(values.shape[0]), layout)

    def validate(self) -> "PoseSequence":
        if np.any(self.counters < 0.0) or np.any(self.counters > 1.0):
            raise ContractError("counters must lie in [0, 1]")
        if np.any(np.diff(self.counters) < 0.0):
            raise ContractError("counters must be non-decreasing")
        return self

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def frames(self) -> List[PoseFrame]:
        return [PoseFrame(row, float(c)) for row, c in zip(self.values, self.counters)]

    @property
    def manual(self) -> np.ndarray:
        return self.layout.split(self.values)[0]

    @property
    def face(self) -> np.ndarray:
        return self.layout.split(self.values)[1]

    def with_counters(self) -> np.ndarray:
        """U × (pose_dim + 1) rows as fed to the decoder"""
        return np.hstack([self.values, self.counters[:, None]])

    def project(self, columns: np.ndarray, layout: ChannelLayout) -> "PoseSequence":
        return replace(self, values=self.values[:, columns], layout=layout)


@dataclass(frozen=True)
class CorpusLimits:
    """Longest target (frames) and source (tokens) in a corpus"""

    u_max: int
    t_max: int

    @classmethod
    def from_examples(cls, examples: Sequence["CorpusExample"]) -> "CorpusLimits":
        if not examples:
            raise ContractError("cannot compute limits of an empty corpus")
        return cls(u_max=max(len(e.target) for e in examples),
                   t_max=max(len(e.source) for e in examples))

    def check(self, source_len: int, target_len: int) -> None:
        if target_len > self.u_max:
            raise ContractError(f"target has {target_len} frames, U_max is {self.u_max}")
        if source_len > self.t_max:
            raise ContractError(f"source has {source_len} tokens, T_max is {self.t_max}")


@dataclass(frozen=True)
class CorpusExample:
    """A source token sequence paired with its target pose sequence"""

    id: str
    source: TokenSequence
    target: PoseSequence
    provenance: str = ""
    flags: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "source", tuple(int(t) for t in self.source))
        if len(self.source) < 1:
            raise ContractError(f"example {self.id} has an empty source")


@dataclass
class Corpus:
    """Examples sharing one channel layout"""

    examples: List[CorpusExample]
    layout: ChannelLayout
    channels: Channels = Channels.BOTH
    _limits: Optional[CorpusLimits] = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.examples)

    def __iter__(self) -> Iterator[CorpusExample]:
        return iter(self.examples)

    def __getitem__(self, index: int) -> CorpusExample:
        return self.examples[index]

    @property
    def limits(self) -> CorpusLimits:
        if self._limits is None:
            self._limits = CorpusLimits.from_examples(self.examples)
        return self._limits

    def subset(self, indices: Sequence[int]) -> "Corpus":
        """Examples at ``indices``; limits stay those of the full corpus"""
        return Corpus([self.examples[i] for i in indices], self.layout, self.channels, self.limits)

    def project(self, channels: Channels) -> "Corpus":
        """Keep only the pose columns selected by ``channels``"""
        columns, layout = select_channels(self.layout, channels)
        examples = [replace(e, target=e.target.project(columns, layout)) for e in self.examples]
        return Corpus(examples, layout, channels, self._limits)

    def mean_frame(self) -> np.ndarray:
        return np.concatenate([e.target.values for e in self.examples]).mean(axis=0)


def counter_targets(length: int) -> np.ndarray:
    """Linear progress ramp u / U for u = 1..U, ending at exactly 1.0"""
    if length < 1:
        raise ContractError(f"counter_targets needs U >= 1, got {length}")
    return np.arange(1, length + 1, dtype=np.float64) / length


def concat_channels(manual: np.ndarray, face: np.ndarray) -> np.ndarray:
    """Row-wise [manual | face]"""
    manual = np.asarray(manual, dtype=np.float64)
    face = np.asarray(face, dtype=np.float64)
    if manual.shape[0] != face.shape[0]:
        raise ContractError(f"manual has {manual.shape[0]} frames, face has {face.shape[0]}")
    return np.hstack([manual.reshape(manual.shape[0], -1), face.reshape(face.shape[0], -1)])


def normalize_face(landmarks: np.ndarray, nose_index: int) -> Tuple[np.ndarray, bool]:
    """
    Scale landmarks to a unit bounding-box diagonal and centre them on the nose

    Args:
        landmarks: J_f × 2 coordinates
        nose_index: Row of the nose landmark

    Returns:
        (normalised landmarks, degenerate flag); a zero-extent face yields zeros
    """
    landmarks = np.asarray(landmarks, dtype=np.float64)
    if not 0 <= nose_index < landmarks.shape[0]:
        raise ContractError(f"nose_index {nose_index} outside {landmarks.shape[0]} landmarks")
    diagonal = np.linalg.norm(landmarks.max(axis=0) - landmarks.min(axis=0))
    if diagonal < 1e-12:
        return np.zeros_like(landmarks), True
    scaled = landmarks / diagonal
    return scaled - scaled[nose_index], False


def normalize_face_block(values: np.ndarray, layout: ChannelLayout) -> Tuple[np.ndarray, bool]:
    """Apply normalize_face to the face block of every frame"""
    if layout.face_landmarks == 0:
        return np.asarray(values, dtype=np.float64), False
    manual, face = layout.split(values)
    frames = face.reshape(face.shape[0], layout.face_landmarks, FACE_COORDS)
    degenerate = False
    out = np.empty_like(frames)
    for u, frame in enumerate(frames):
        out[u], flagged = normalize_face(frame, layout.nose_index)
        degenerate |= flagged
    return concat_channels(manual, out.reshape(face.shape)), degenerate


def select_channels(layout: ChannelLayout, channels: Channels) -> Tuple[np.ndarray, ChannelLayout]:
    """
    Column indices and reduced layout for a channel selection

    Raises:
        ContractError: the selection leaves no columns
    """
    channels = Channels(channels)
    if channels == Channels.BOTH:
        return np.arange(layout.pose_dim), layout
    if channels == Channels.MANUAL:
        if layout.manual_joints == 0:
            raise ContractError("layout has no manual joints to select")
        return layout.manual_columns, ChannelLayout(layout.manual_joints, 0)
    if layout.face_landmarks == 0:
        raise ContractError("layout has no face landmarks to select")
    return layout.face_columns, ChannelLayout(0, layout.face_landmarks, layout.nose_index)
