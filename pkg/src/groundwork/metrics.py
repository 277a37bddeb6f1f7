"""Quantitative measures for dance-motion keypoint data: movement and pose
diversity, pose-space Fréchet distance, kinematic beats and music-beat
alignment, sequence MAE, dance-element distribution, and beat-based unit
splitting."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np

from groundwork.kernels import dtw_cost
from groundwork.model import NUM_JOINTS, bounding_box, normalize_points
from groundwork.sequence import KeypointSequence, split_regions


@dataclass(frozen=True)
class VideoMeta:
    video_id: str
    fps: float
    frame_width: int
    frame_height: int

    def __post_init__(self):
        if self.fps <= 0:
            raise ValueError(f"fps must be positive: {self.fps}")
        if self.frame_width <= 0 or self.frame_height <= 0:
            raise ValueError(f"frame dimensions must be positive: {self.frame_width}x{self.frame_height}")


class Movement(str, Enum):
    TOPROCK = "toprock"
    FOOTWORK = "footwork"
    POWERMOVE = "powermove"


@dataclass(frozen=True)
class Segment:
    """Temporal span labelled with one dance element."""

    start_frame: int
    end_frame: int
    movement: Movement
    dancer_id: str
    sequence_id: str
    battle_order: int
    override: bool = False  # marks spans where the auto-selected dancer was wrong

    def __post_init__(self):
        if self.start_frame > self.end_frame:
            raise ValueError(f"segment start {self.start_frame} > end {self.end_frame}")
        if self.battle_order < 1:
            raise ValueError(f"battle_order must be >= 1: {self.battle_order}")
        object.__setattr__(self, "movement", Movement(self.movement))

    @property
    def n_frames(self) -> int:
        return self.end_frame - self.start_frame + 1


@dataclass(frozen=True)
class BeatTrack:
    """Sorted beat timestamps in seconds."""

    times: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1:
            raise ValueError(f"beat times must be 1-D, got shape {t.shape}")
        if t.size and (t[0] < 0 or (np.diff(t) <= 0).any()):
            raise ValueError("beat times must be non-negative and strictly increasing")
        object.__setattr__(self, "times", t)

    def __len__(self) -> int:
        return len(self.times)


@dataclass(frozen=True)
class GaussianStats:
    """Mean and covariance of flattened normalized poses."""

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.covariance, dtype=float)
        d = mean.shape[0]
        if mean.ndim != 1 or cov.shape != (d, d):
            raise ValueError(f"inconsistent stats shapes: {mean.shape} vs {cov.shape}")
        if not (np.isfinite(mean).all() and np.isfinite(cov).all()):
            raise ValueError("gaussian statistics must be finite")
        if np.abs(cov - cov.T).max() > 1e-9:
            raise ValueError("covariance must be symmetric")
        if np.linalg.eigvalsh(cov).min() < -1e-8:
            raise ValueError("covariance must be positive semi-definite")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)

    @classmethod
    def from_vectors(cls, vectors: np.ndarray) -> "GaussianStats":
        v = np.asarray(vectors, dtype=float)
        if v.shape[0] <= v.shape[1]:
            raise ValueError(
                f"need more samples than dimensions: {v.shape[0]} x {v.shape[1]}"
            )
        cov = np.cov(v, rowvar=False)
        cov = (cov + cov.T) / 2.0
        return cls(v.mean(axis=0), cov)


def _norm_pose_array(poses) -> np.ndarray:
    """Stack poses as (N, 17, 2) pixel coordinates."""
    if isinstance(poses, np.ndarray):
        arr = np.asarray(poses, dtype=float)
        if arr.ndim != 3 or arr.shape[1:] != (NUM_JOINTS, 2):
            raise ValueError(f"expected (N, {NUM_JOINTS}, 2) poses, got {arr.shape}")
        return arr
    return np.stack([p.xy() for p in poses])


def normalize_by_own_box(poses) -> np.ndarray:
    """Normalize each pose by its own tightest box; returns (N, 17, 2)."""
    arr = _norm_pose_array(poses)
    if not np.isfinite(arr).all():
        # slow path: per-pose handling of partially finite joints
        out = np.empty_like(arr)
        for i in range(arr.shape[0]):
            out[i] = normalize_points(arr[i], bounding_box(arr[i]))
        return out
    lo = arr.min(axis=1, keepdims=True)
    extent = np.maximum(arr.max(axis=1, keepdims=True) - lo, 1e-6)
    return (arr - lo) / extent


def _sequence_normalized(seq: KeypointSequence) -> np.ndarray:
    """Per-frame tightest-box normalization; NaN rows stay NaN."""
    out = np.full_like(seq.coords, np.nan)
    finite = np.isfinite(seq.coords).all(axis=(1, 2))
    if finite.any():
        out[finite] = normalize_by_own_box(seq.coords[finite])
    return out


def movement_diversity(
    sequences: Sequence[tuple[KeypointSequence, VideoMeta]],
    cuts: Optional[Sequence[Iterable[int]]] = None,
) -> float:
    """Average per-joint speed in box-normalized units per second.

    Per-frame tightest-box normalization cancels camera translation, zoom
    and panning; displacements are only taken between adjacent frames
    inside one shot piece. Averaged over joints and frames per sequence,
    then over sequences.
    """
    if not sequences:
        raise ValueError("movement diversity needs at least one sequence")
    if cuts is None:
        cuts = [()] * len(sequences)
    per_sequence = []
    for (seq, meta), seq_cuts in zip(sequences, cuts):
        norm = _sequence_normalized(seq)
        samples = []
        for region in split_regions(seq.frames, seq_cuts):
            frames = seq.frames[region]
            ok = np.isfinite(norm[region]).all(axis=(1, 2))
            adjacent = (np.diff(frames) == 1) & ok[:-1] & ok[1:]
            if not adjacent.any():
                continue
            steps = np.linalg.norm(np.diff(norm[region], axis=0), axis=2)  # (t-1, 17)
            samples.append(steps[adjacent] * meta.fps)
        if not samples:
            raise ValueError(
                f"sequence over frames {seq.frames[0]}..{seq.frames[-1]} has no "
                "adjacent frame pair inside any shot piece"
            )
        per_sequence.append(float(np.concatenate(samples).mean()))
    return float(np.mean(per_sequence))


def pose_diversity(
    sequences: Sequence[tuple[KeypointSequence, VideoMeta]],
) -> tuple[float, np.ndarray]:
    """Standard deviation of normalized joint positions.

    Per sequence and joint, the per-axis std over frames; averaged over
    sequences and joints into an (x, y) pair whose mean is the headline
    scalar. Returns (scalar, per-axis pair).
    """
    if not sequences:
        raise ValueError("pose diversity needs at least one sequence")
    per_sequence = []
    for seq, _meta in sequences:
        norm = _sequence_normalized(seq)
        finite = np.isfinite(norm).all(axis=(1, 2))
        if finite.sum() < 2:
            raise ValueError("pose diversity needs at least 2 usable frames per sequence")
        per_sequence.append(norm[finite].std(axis=0))  # (17, 2)
    per_axis = np.mean(np.stack(per_sequence), axis=(0, 1))  # (2,)
    return float(per_axis.mean()), per_axis


def _psd_sqrt(matrix: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(matrix)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


FID_REGULARIZER = 1e-6


def pose_fid(set_a, set_b) -> float:
    """Fréchet distance between Gaussian fits of the two normalized pose sets.

    Each pose is normalized by its own tightest box and flattened to a
    34-vector. Covariances get a small diagonal regularizer; the matrix
    square root is taken through a symmetric eigendecomposition with
    negative eigenvalues clamped to zero.
    """
    flat_a = normalize_by_own_box(set_a).reshape(-1, NUM_JOINTS * 2)
    flat_b = normalize_by_own_box(set_b).reshape(-1, NUM_JOINTS * 2)
    stats_a = GaussianStats.from_vectors(flat_a)
    stats_b = GaussianStats.from_vectors(flat_b)

    eye = np.eye(NUM_JOINTS * 2)
    cov_a = stats_a.covariance + FID_REGULARIZER * eye
    cov_b = stats_b.covariance + FID_REGULARIZER * eye
    root_a = _psd_sqrt(cov_a)
    inner = root_a @ cov_b @ root_a
    inner_vals = np.clip(np.linalg.eigvalsh(inner), 0.0, None)

    delta = stats_a.mean - stats_b.mean
    fid = float(delta @ delta + np.trace(cov_a) + np.trace(cov_b) - 2.0 * np.sqrt(inner_vals).sum())
    if not np.isfinite(fid):
        raise ValueError("non-finite distance; check the input poses")
    return max(fid, 0.0)


def kinematic_beats(
    sequence: KeypointSequence, meta: VideoMeta, prominence_k: float = 1.0
) -> BeatTrack:
    """Peaks of the second difference of mean normalized joint displacement.

    A frame is a beat when its acceleration value is a strict local maximum
    exceeding mean + prominence_k * std of the acceleration series.
    """
    if len(sequence) < 4:
        raise ValueError(f"kinematic beats need at least 4 frames, got {len(sequence)}")
    norm = _sequence_normalized(sequence)
    if not np.isfinite(norm).all():
        raise ValueError("kinematic beats require a fully interpolated sequence")
    move = np.linalg.norm(np.diff(norm, axis=0), axis=2).mean(axis=1)  # (T-1,)
    accel = move[2:] - 2.0 * move[1:-1] + move[:-2]  # (T-3,), value k sits at frame k+2
    if len(accel) < 1:
        raise ValueError("sequence too short for acceleration peaks")
    # absolute floor keeps float jitter on constant-velocity motion from
    # registering as peaks
    threshold = max(accel.mean() + prominence_k * accel.std(), 1e-9 * float(np.abs(move).max()))
    peaks = []
    for k in range(1, len(accel) - 1):
        if accel[k] > accel[k - 1] and accel[k] > accel[k + 1] and accel[k] > threshold:
            peaks.append(k + 2)
    times = sequence.frames[np.array(peaks, dtype=int)] / meta.fps if peaks else np.empty(0)
    return BeatTrack(times)


def beat_alignment_score(kin: BeatTrack, music: BeatTrack, sigma: float = 0.1) -> float:
    """Mean Gaussian kernel of each kinematic beat's distance to its nearest
    music beat; 1.0 when every kinematic beat lands on a music beat."""
    if len(kin) == 0 or len(music) == 0:
        raise ValueError("beat alignment is undefined for empty beat tracks")
    if sigma <= 0:
        raise ValueError(f"sigma must be positive: {sigma}")
    nearest = np.min(np.abs(kin.times[:, None] - music.times[None, :]), axis=1)
    return float(np.mean(np.exp(-(nearest**2) / (2.0 * sigma**2))))


def beat_dtw_cost(kin: BeatTrack, music: BeatTrack) -> float:
    """Accumulated |time difference| of the best monotone beat alignment."""
    if len(kin) == 0 or len(music) == 0:
        raise ValueError("beat DTW is undefined for empty beat tracks")
    return float(dtw_cost(kin.times, music.times))


def beat_dtw_cost_normalized(kin: BeatTrack, music: BeatTrack) -> float:
    """Accumulated alignment cost divided by the summed track lengths."""
    return beat_dtw_cost(kin, music) / (len(kin) + len(music))


def sequence_mae(
    a: KeypointSequence, b: KeypointSequence, frames: Optional[Iterable[int]] = None
) -> float:
    """Mean absolute coordinate error in pixels over frames and joints.

    Optionally restricted to a frame subset; both sequences must cover the
    compared frames with finite poses.
    """
    if frames is None:
        if not np.array_equal(a.frames, b.frames):
            raise ValueError("sequences cover different frame sets")
        sel_a, sel_b = a, b
    else:
        wanted = sorted(set(frames))
        sel_a, sel_b = a.subset(wanted), b.subset(wanted)
    if not (np.isfinite(sel_a.coords).all() and np.isfinite(sel_b.coords).all()):
        raise ValueError("compared frames must have finite poses in both sequences")
    return float(np.abs(sel_a.coords - sel_b.coords).mean())


@dataclass
class ElementDistribution:
    """Percentage of frames per dance element, per battle order and overall."""

    per_order: dict[int, dict[str, float]]
    overall: dict[str, float]


def element_distribution(segments: Sequence[Segment]) -> ElementDistribution:
    """Average per-sequence percentage of frames per element, grouped by the
    sequence's order in the battle and globally."""
    by_sequence: dict[str, list[Segment]] = {}
    for seg in segments:
        by_sequence.setdefault(seg.sequence_id, []).append(seg)

    triples: list[tuple[int, np.ndarray]] = []
    order = [Movement.TOPROCK, Movement.FOOTWORK, Movement.POWERMOVE]
    for seq_id, segs in by_sequence.items():
        segs = sorted(segs, key=lambda s: s.start_frame)
        for s1, s2 in zip(segs, segs[1:]):
            if s2.start_frame <= s1.end_frame:
                raise ValueError(
                    f"segments overlap in sequence {seq_id}: "
                    f"{s1.start_frame}..{s1.end_frame} and {s2.start_frame}..{s2.end_frame}"
                )
        orders = {s.battle_order for s in segs}
        if len(orders) != 1:
            raise ValueError(f"sequence {seq_id} mixes battle orders {sorted(orders)}")
        counts = np.array(
            [sum(s.n_frames for s in segs if s.movement is mv) for mv in order], dtype=float
        )
        triples.append((orders.pop(), 100.0 * counts / counts.sum()))

    if not triples:
        raise ValueError("no segments given")

    def _avg(items: list[np.ndarray]) -> dict[str, float]:
        mean = np.mean(np.stack(items), axis=0)
        return {mv.value: float(v) for mv, v in zip(order, mean)}

    per_order: dict[int, dict[str, float]] = {}
    for battle_order in sorted({o for o, _ in triples}):
        per_order[battle_order] = _avg([t for o, t in triples if o == battle_order])
    return ElementDistribution(per_order, _avg([t for _, t in triples]))


@dataclass(frozen=True)
class UnitSpan:
    start_frame: int
    end_frame: int
    short: bool = False


def split_at_beats(
    sequence: KeypointSequence,
    meta: VideoMeta,
    target_len: int = 32,
    prominence_k: float = 1.0,
) -> list[UnitSpan]:
    """Partition a sequence into roughly target_len-frame units, cutting at
    the kinematic beat nearest each target boundary.

    Beats further than target_len/2 from the boundary are ignored (the cut
    falls exactly on the boundary); with no beats at all the split is
    uniform. The trailing partial unit is kept and flagged short.
    """
    if len(sequence) < 2:
        raise ValueError("cannot split a sequence shorter than 2 frames")
    if target_len < 2:
        raise ValueError(f"target_len must be >= 2: {target_len}")
    beat_frames: np.ndarray = np.empty(0, dtype=int)
    if len(sequence) >= 4:
        times = kinematic_beats(sequence, meta, prominence_k).times
        beat_frames = np.rint(times * meta.fps).astype(int)

    first, last = int(sequence.frames[0]), int(sequence.frames[-1])
    spans: list[UnitSpan] = []
    prev = first
    while last - prev + 1 > target_len:
        target = prev + target_len
        candidates = [
            int(b)
            for b in beat_frames
            if prev < b <= last and abs(int(b) - target) <= target_len // 2
        ]
        cut = min(candidates, key=lambda b: (abs(b - target), b)) if candidates else target
        spans.append(UnitSpan(prev, cut - 1))
        prev = cut
    spans.append(UnitSpan(prev, last, short=last - prev + 1 < target_len))
    return spans
