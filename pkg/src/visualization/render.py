"""
Static SVG strips of sampled pose frames
"""

import logging
from pathlib import Path
from typing import Union

import matplotlib

matplotlib.use("Agg")

import numpy as np
from matplotlib.figure import Figure

from src.data_processing.pose import FACE_COORDS, MANUAL_COORDS, PoseSequence

logger = logging.getLogger(__name__)

SVG_HASH_SALT = "spgan"
PANEL_SIZE = 2.0  # inches
FACE_OFFSET = np.array([0.0, 1.5])  # face dots drawn above the manual chain


def sample_frames(length: int, n_frames: int) -> np.ndarray:
    """Up to ``n_frames`` evenly spaced, distinct frame indices"""
    if length < 1:
        return np.zeros(0, dtype=np.int64)
    picks = np.linspace(0, length - 1, num=max(1, min(n_frames, length)))
    return np.unique(np.round(picks).astype(np.int64))


def render_sequence_svg(seq: PoseSequence, path: Union[str, Path], n_frames: int = 8,
                        title: str = "") -> Path:
    """
    Draw sampled frames side by side

    The manual block is drawn as a chain of line segments through the joints
    (x, y; depth dropped), the face block as dots. The SVG carries no date
    and uses a fixed hash salt, so equal inputs give equal files.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    layout = seq.layout
    frames = sample_frames(len(seq), n_frames)

    with matplotlib.rc_context({"svg.hashsalt": SVG_HASH_SALT, "svg.fonttype": "none"}):
        fig = Figure(figsize=(PANEL_SIZE * len(frames), PANEL_SIZE + 0.4))
        axes = fig.subplots(1, len(frames), squeeze=False)[0]
        for ax, u in zip(axes, frames):
            manual, face = layout.split(seq.values[u])
            if layout.manual_joints:
                joints = manual.reshape(layout.manual_joints, MANUAL_COORDS)
                ax.plot(joints[:, 0], joints[:, 1], color="tab:blue", linewidth=1.5, marker="o", markersize=3)
            if layout.face_landmarks:
                points = face.reshape(layout.face_landmarks, FACE_COORDS) + FACE_OFFSET
                ax.scatter(points[:, 0], points[:, 1], s=6, color="tab:red")
            ax.set_title(f"frame {u + 1} · c={seq.counters[u]:.2f}", fontsize=7)
            ax.set_aspect("equal", adjustable="datalim")
            ax.set_xticks([])
            ax.set_yticks([])
        if title:
            fig.suptitle(title, fontsize=8)
        fig.savefig(path, format="svg", metadata={"Date": None})

    logger.info(f"🖼️  Rendered {len(frames)} frames: {path}")
    return path
