"""
Bank of per-token motion primitives shared by synthesis and back-translation
"""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from src.data_processing.pose import ChannelLayout, Channels, select_channels
from src.errors import ContractError, CorpusParseError


@dataclass(frozen=True)
class PrimitiveBank:
    """
    Motion primitives: entry i is variant ``variants[i]`` of token ``token_ids[i]``

    motifs has shape K × motif_len × pose_dim. Entries are sorted by
    (token id, variant), which fixes tie-breaking in nearest-primitive search.
    """

    token_ids: np.ndarray
    variants: np.ndarray
    motifs: np.ndarray
    layout: ChannelLayout

    def __post_init__(self):
        if self.motifs.ndim != 3 or self.motifs.shape[0] != len(self.token_ids):
            raise ContractError("one motif per (token, variant) entry is required")
        if self.motifs.shape[2] != self.layout.pose_dim:
            raise ContractError(
                f"motifs have {self.motifs.shape[2]} columns, layout needs {self.layout.pose_dim}")

    @property
    def motif_len(self) -> int:
        return self.motifs.shape[1]

    def __len__(self) -> int:
        return len(self.token_ids)

    def motif(self, token_id: int, variant: int = 0) -> np.ndarray:
        hits = np.flatnonzero((self.token_ids == token_id) & (self.variants == variant))
        if hits.size == 0:
            raise ContractError(f"no primitive for token {token_id} variant {variant}")
        return self.motifs[hits[0]]

    def project(self, channels: Channels) -> "PrimitiveBank":
        columns, layout = select_channels(self.layout, channels)
        return PrimitiveBank(self.token_ids, self.variants, self.motifs[:, :, columns], layout)

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = {
            "layout": {
                "manual_joints": self.layout.manual_joints,
                "face_landmarks": self.layout.face_landmarks,
                "nose_index": self.layout.nose_index,
            },
            "motif_len": self.motif_len,
            "primitives": [
                {"token_id": int(t), "variant": int(v), "values": m.tolist()}
                for t, v, m in zip(self.token_ids, self.variants, self.motifs)
            ],
        }
        with open(path, "w", encoding="utf-8") as f:
            json.dump(payload, f, indent=1)
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "PrimitiveBank":
        path = Path(path)
        with open(path, "r", encoding="utf-8") as f:
            try:
                payload = json.load(f)
            except json.JSONDecodeError as e:
                raise CorpusParseError(f"primitive bank is not valid JSON ({e.msg})", e.lineno, str(path)) from e
        layout = ChannelLayout(**payload["layout"])
        entries = payload["primitives"]
        if not entries:
            raise CorpusParseError("primitive bank is empty", None, str(path))
        return cls(
            token_ids=np.array([e["token_id"] for e in entries], dtype=np.int64),
            variants=np.array([e["variant"] for e in entries], dtype=np.int64),
            motifs=np.array([e["values"] for e in entries], dtype=np.float64),
            layout=layout,
        )
