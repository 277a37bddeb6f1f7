"""Decide which frames need manual annotation, emit the annotator manifest,
and merge returned manual keypoints into a provenance-flagged sequence."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from groundwork.model import NUM_JOINTS, PoseCandidate
from groundwork.sequence import KeypointSequence, Provenance
from groundwork.tracking import ActiveSelection


class FrameStatus(str, Enum):
    GOOD_AUTOMATIC = "good_automatic"
    MISSING = "missing"
    MUST_LABEL = "must_label"
    MANUAL = "manual"


@dataclass(frozen=True)
class SelectorConfig:
    labelling_threshold: float = 0.5
    max_consecutive_missing: int = 2
    max_missing_per_window: int = 5
    window: int = 10

    def __post_init__(self):
        if not 0.0 <= self.labelling_threshold <= 1.0:
            raise ValueError(f"labelling_threshold must be in [0, 1]: {self.labelling_threshold}")
        if not self.max_consecutive_missing < self.max_missing_per_window <= self.window:
            raise ValueError(
                "need max_consecutive_missing < max_missing_per_window <= window, got "
                f"{self.max_consecutive_missing}/{self.max_missing_per_window}/{self.window}"
            )


@dataclass
class LabelManifestEntry:
    """One frame handed to the annotators; the pipeline/UI contract."""

    video_id: str
    frame: int
    reason: str  # "low_score" | "outlier"
    status: str = "pending"  # "pending" | "done"
    submitted_pose: Optional[np.ndarray] = None  # (17, 2) when done

    def __post_init__(self):
        if self.reason not in ("low_score", "outlier"):
            raise ValueError(f"unknown manifest reason: {self.reason}")
        if self.status not in ("pending", "done"):
            raise ValueError(f"unknown manifest status: {self.status}")
        if (self.submitted_pose is not None) != (self.status == "done"):
            raise ValueError("submitted_pose must be present exactly when status is done")
        if self.submitted_pose is not None:
            pose = np.asarray(self.submitted_pose, dtype=float)
            if pose.shape != (NUM_JOINTS, 2) or not np.isfinite(pose).all():
                raise ValueError(f"submitted_pose must be finite ({NUM_JOINTS}, 2)")
            self.submitted_pose = pose


def labelling_score(candidate: PoseCandidate) -> float:
    """Box confidence times the mean keypoint confidence."""
    return candidate.box_score * float(np.mean(candidate.pose.scores()))


def mark_missing(
    selection: ActiveSelection,
    cfg: SelectorConfig,
    frames: Optional[list[int]] = None,
) -> dict[int, FrameStatus]:
    """Initial status per frame: missing when uncovered or scored below the
    labelling threshold, good_automatic otherwise.

    frames defaults to the selection's full covered span (inclusive).
    """
    if frames is None:
        covered = selection.frames()
        if not covered:
            return {}
        frames = list(range(covered[0], covered[-1] + 1))
    statuses: dict[int, FrameStatus] = {}
    for f in frames:
        chosen = selection.get(f)
        if chosen is None or labelling_score(chosen[1]) < cfg.labelling_threshold:
            statuses[f] = FrameStatus.MISSING
        else:
            statuses[f] = FrameStatus.GOOD_AUTOMATIC
    return statuses


def apply_discount(
    statuses: dict[int, FrameStatus], cfg: SelectorConfig
) -> dict[int, FrameStatus]:
    """Promote just enough missing frames to must_label that every window
    of `window` frames keeps at most max_missing_per_window missing frames
    and no missing run exceeds max_consecutive_missing.

    Single left-to-right greedy pass over a contiguous frame range (one
    dance segment within one shot; the caller pre-splits). Promotes the
    current frame when a constraint would break; promoted frames count as
    labelled for subsequent checks. Never demotes.
    """
    frames = sorted(statuses)
    if frames and frames[-1] - frames[0] + 1 != len(frames):
        raise ValueError("statuses must cover a contiguous frame range")
    out = dict(statuses)
    still_missing: list[bool] = []
    run = 0
    for i, f in enumerate(frames):
        if out[f] is not FrameStatus.MISSING:
            still_missing.append(False)
            run = 0
            continue
        window_lo = max(0, i - cfg.window + 1)
        in_window = sum(still_missing[window_lo:i]) + 1
        if run >= cfg.max_consecutive_missing or in_window > cfg.max_missing_per_window:
            out[f] = FrameStatus.MUST_LABEL
            still_missing.append(False)
            run = 0
        else:
            still_missing.append(True)
            run += 1
    return out


def emit_manifest(
    statuses: dict[int, FrameStatus], video_id: str, reason: str
) -> list[LabelManifestEntry]:
    """One pending entry per must_label frame, in frame order."""
    return [
        LabelManifestEntry(video_id=video_id, frame=f, reason=reason)
        for f in sorted(statuses)
        if statuses[f] is FrameStatus.MUST_LABEL
    ]


def merge_manual(
    selection: ActiveSelection,
    statuses: dict[int, FrameStatus],
    manifest: list[LabelManifestEntry],
) -> KeypointSequence:
    """Combine automatic picks and returned manual points into one stream.

    must_label frames take their submitted coordinates (provenance manual,
    score 1.0); good frames keep the selected candidate's pose; the rest
    stay missing for the interpolation stage to fill.
    """
    done = {e.frame: e for e in manifest if e.status == "done"}
    pending = [
        f
        for f in sorted(statuses)
        if statuses[f] in (FrameStatus.MUST_LABEL, FrameStatus.MANUAL) and f not in done
    ]
    if pending:
        raise ValueError(f"manifest entries still pending for frames {pending}")

    frames = sorted(statuses)
    coords = np.full((len(frames), NUM_JOINTS, 2), np.nan)
    provenance: list[Provenance] = []
    scores = np.full(len(frames), np.nan)
    for i, f in enumerate(frames):
        status = statuses[f]
        if status in (FrameStatus.MUST_LABEL, FrameStatus.MANUAL):
            coords[i] = done[f].submitted_pose
            provenance.append(Provenance.MANUAL)
            scores[i] = 1.0
        elif status is FrameStatus.GOOD_AUTOMATIC:
            chosen = selection.get(f)
            if chosen is None:
                raise ValueError(f"frame {f} marked good_automatic but has no selected candidate")
            coords[i] = chosen[1].pose.xy()
            provenance.append(Provenance.AUTOMATIC)
            scores[i] = labelling_score(chosen[1])
        else:
            provenance.append(Provenance.MISSING)
    return KeypointSequence(frames, coords, provenance, scores)
