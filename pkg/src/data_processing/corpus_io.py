"""
Read and write corpus files

Format (UTF-8, human-diffable):

    # spgan-corpus v1 manual_joints=<J_m> face_landmarks=<J_f> nose_index=<n>
    @ <id> | <token ids> | <U> | <provenance> | <flags>
    <U lines of pose_dim decimals>
    @ ...

Counters are not stored; they are rebuilt with counter_targets on load.
"""

import json
import logging
from pathlib import Path
from typing import Dict, List, Union

import numpy as np

from src.data_processing.pose import (
    ChannelLayout,
    Corpus,
    CorpusExample,
    PoseSequence,
)
from src.errors import ContractError, CorpusParseError, EmptyCorpusError

logger = logging.getLogger(__name__)

HEADER_PREFIX = "# spgan-corpus"
FORMAT_VERSION = "v1"
RECORD_MARK = "@"


def _format_row(row: np.ndarray) -> str:
    return " ".join(f"{v:.17g}" for v in row)


def format_example(example: CorpusExample) -> List[str]:
    seq = example.target
    head = " | ".join([
        example.id,
        " ".join(str(t) for t in example.source),
        str(len(seq)),
        example.provenance,
        ",".join(example.flags),
    ])
    return [f"{RECORD_MARK} {head}"] + [_format_row(row) for row in seq.values]


def format_header(layout: ChannelLayout) -> str:
    return (f"{HEADER_PREFIX} {FORMAT_VERSION} manual_joints={layout.manual_joints} "
            f"face_landmarks={layout.face_landmarks} nose_index={layout.nose_index}")


def save_corpus(corpus: Corpus, path: Union[str, Path]) -> Path:
    """Write ``corpus`` to ``path`` (parent directories are created)"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [format_header(corpus.layout)]
    for example in corpus:
        lines.extend(format_example(example))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info(f"💾 Saved corpus ({len(corpus)} examples): {path}")
    return path


def _parse_header(line: str, path: str) -> ChannelLayout:
    parts = line.split()
    if not line.startswith(HEADER_PREFIX) or len(parts) < 3 or parts[2] != FORMAT_VERSION:
        raise CorpusParseError(f"expected header '{HEADER_PREFIX} {FORMAT_VERSION} ...'", 1, path)
    fields: Dict[str, int] = {}
    for item in parts[3:]:
        key, sep, value = item.partition("=")
        if not sep:
            raise CorpusParseError(f"malformed header field {item!r}", 1, path)
        try:
            fields[key] = int(value)
        except ValueError:
            raise CorpusParseError(f"header field {key} is not an integer", 1, path) from None
    try:
        return ChannelLayout(fields["manual_joints"], fields["face_landmarks"], fields.get("nose_index", 0))
    except KeyError as e:
        raise CorpusParseError(f"header is missing {e.args[0]}", 1, path) from None
    except ContractError as e:
        raise CorpusParseError(str(e), 1, path) from None


def parse_corpus(text: str, path: str = "<string>") -> Corpus:
    """
    Parse corpus text

    Raises:
        EmptyCorpusError: no header or no examples
        CorpusParseError: malformed header, record or row (with line number)
    """
    lines = text.splitlines()
    if not lines or not any(l.strip() for l in lines):
        raise EmptyCorpusError("corpus file is empty", None, path)
    layout = _parse_header(lines[0], path)

    examples: List[CorpusExample] = []
    i = 1
    while i < len(lines):
        line = lines[i]
        number = i + 1
        if not line.strip():
            i += 1
            continue
        if not line.startswith(RECORD_MARK + " "):
            raise CorpusParseError("expected a record line starting with '@'", number, path)
        fields = [f.strip() for f in line[2:].split("|")]
        if len(fields) != 5:
            raise CorpusParseError(f"record has {len(fields)} fields, expected 5", number, path)
        example_id, token_text, frame_text, provenance, flag_text = fields
        try:
            tokens = tuple(int(t) for t in token_text.split())
            frames = int(frame_text)
        except ValueError:
            raise CorpusParseError("tokens and frame count must be integers", number, path) from None
        if not tokens or frames < 1:
            raise CorpusParseError("a record needs at least one token and one frame", number, path)

        rows = np.empty((frames, layout.pose_dim), dtype=np.float64)
        for r in range(frames):
            row_number = number + 1 + r
            if i + 1 + r >= len(lines):
                raise CorpusParseError(f"example {example_id} ends after {r} of {frames} rows",
                                       row_number, path)
            parts = lines[i + 1 + r].split()
            if len(parts) != layout.pose_dim:
                raise CorpusParseError(
                    f"row {r} of example {example_id} has {len(parts)} values, "
                    f"expected pose_dim={layout.pose_dim}", row_number, path)
            try:
                rows[r] = [float(p) for p in parts]
            except ValueError:
                raise CorpusParseError(f"row {r} of example {example_id} is not numeric",
                                       row_number, path) from None
        examples.append(CorpusExample(
            id=example_id,
            source=tokens,
            target=PoseSequence.from_values(rows, layout),
            provenance=provenance,
            flags=tuple(f for f in flag_text.split(",") if f),
        ))
        i += 1 + frames

    if not examples:
        raise EmptyCorpusError("corpus file holds no examples", None, path)
    return Corpus(examples, layout)


def load_corpus(path: Union[str, Path]) -> Corpus:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Corpus file not found: {path}\nPlease run the synth command first!")
    corpus = parse_corpus(path.read_text(encoding="utf-8"), str(path))
    logger.info(f"📂 Loaded corpus ({len(corpus)} examples): {path}")
    return corpus


def save_metadata(corpus: Corpus, path: Union[str, Path], **extra) -> Path:
    """Corpus summary written next to the corpus file"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    limits = corpus.limits
    metadata = {
        "total_examples": len(corpus),
        "u_max": limits.u_max,
        "t_max": limits.t_max,
        "manual_joints": corpus.layout.manual_joints,
        "face_landmarks": corpus.layout.face_landmarks,
        "pose_dim": corpus.layout.pose_dim,
        **extra,
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(metadata, f, indent=2)
    return path
