"""Per-frame keypoint streams with provenance, shared by the selection,
refinement, and metric stages."""

from __future__ import annotations

from enum import Enum
from typing import Iterable, Optional

import numpy as np

from groundwork.model import NUM_JOINTS


class Provenance(str, Enum):
    AUTOMATIC = "automatic"
    MANUAL = "manual"
    INTERPOLATED = "interpolated"
    MISSING = "missing"


class KeypointSequence:
    """Frame-indexed 17-joint coordinate stream.

    coords holds NaN rows for missing frames; labelling_score is NaN where
    not applicable (missing frames). Manual originals can ride along when a
    downstream stage replaces manual values with fitted ones.
    """

    def __init__(
        self,
        frames,
        coords,
        provenance: Iterable[Provenance],
        labelling_score=None,
        manual_originals: Optional[dict[int, np.ndarray]] = None,
    ):
        self.frames = np.asarray(frames, dtype=int)
        self.coords = np.asarray(coords, dtype=float)
        self.provenance = [Provenance(p) for p in provenance]
        if labelling_score is None:
            labelling_score = np.full(len(self.frames), np.nan)
        self.labelling_score = np.asarray(labelling_score, dtype=float)
        self.manual_originals = dict(manual_originals or {})

        t = len(self.frames)
        if self.coords.shape != (t, NUM_JOINTS, 2):
            raise ValueError(f"coords must be ({t}, {NUM_JOINTS}, 2), got {self.coords.shape}")
        if len(self.provenance) != t or self.labelling_score.shape != (t,):
            raise ValueError("provenance and labelling_score must match the frame count")
        if t and (np.diff(self.frames) <= 0).any():
            raise ValueError("frame indices must be strictly increasing")
        for i, p in enumerate(self.provenance):
            row_missing = not np.isfinite(self.coords[i]).all()
            if (p is Provenance.MISSING) != row_missing:
                raise ValueError(
                    f"frame {self.frames[i]}: provenance {p.value} inconsistent with coordinates"
                )

    def __len__(self) -> int:
        return len(self.frames)

    def missing_mask(self) -> np.ndarray:
        return np.array([p is Provenance.MISSING for p in self.provenance], dtype=bool)

    def manual_mask(self) -> np.ndarray:
        return np.array([p is Provenance.MANUAL for p in self.provenance], dtype=bool)

    def index_of(self, frame: int) -> int:
        i = int(np.searchsorted(self.frames, frame))
        if i >= len(self.frames) or self.frames[i] != frame:
            raise KeyError(f"frame {frame} not in sequence")
        return i

    def subset(self, frames: Iterable[int]) -> "KeypointSequence":
        idx = np.array(sorted(self.index_of(f) for f in set(frames)), dtype=int)
        return KeypointSequence(
            self.frames[idx],
            self.coords[idx],
            [self.provenance[i] for i in idx],
            self.labelling_score[idx],
            {f: v for f, v in self.manual_originals.items() if f in set(frames)},
        )


def split_regions(frames: np.ndarray, cuts: Iterable[int]) -> list[np.ndarray]:
    """Split sorted frame indices into index arrays at the given boundaries.

    A cut at frame c separates frames < c from frames >= c. Empty pieces
    are dropped.
    """
    frames = np.asarray(frames)
    edges = sorted({int(c) for c in cuts if frames.size and frames[0] < c <= frames[-1]})
    pieces = []
    start = 0
    for c in edges:
        stop = int(np.searchsorted(frames, c))
        if stop > start:
            pieces.append(np.arange(start, stop))
        start = stop
    if frames.size and start < len(frames):
        pieces.append(np.arange(start, len(frames)))
    return pieces
