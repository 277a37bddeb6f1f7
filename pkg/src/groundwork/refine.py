"""Residual-outlier detection via a sliding median filter, and merged-stream
interpolation with windowed least-squares Bernstein-basis curves."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from groundwork.kernels import rolling_median_mad
from groundwork.model import NUM_JOINTS
from groundwork.sequence import KeypointSequence, Provenance, split_regions

log = logging.getLogger(__name__)

# Scale factor turning a MAD into a normal-consistent sigma estimate.
MAD_TO_SIGMA = 1.4826
MAD_FLOOR = 1e-9


@dataclass(frozen=True)
class OutlierConfig:
    median_window: int = 11
    mad_sigmas: float = 3.0
    min_flagged_joints: int = 5

    def __post_init__(self):
        if self.median_window < 3 or self.median_window % 2 == 0:
            raise ValueError(f"median_window must be odd and >= 3: {self.median_window}")
        if self.mad_sigmas <= 0:
            raise ValueError(f"mad_sigmas must be positive: {self.mad_sigmas}")
        if not 1 <= self.min_flagged_joints <= NUM_JOINTS:
            raise ValueError(f"min_flagged_joints must be in [1, {NUM_JOINTS}]")


@dataclass(frozen=True)
class BezierConfig:
    window: int = 15
    stride: int = 14
    degree: int = 7

    def __post_init__(self):
        if self.window < 2:
            raise ValueError(f"window must be >= 2: {self.window}")
        if not 1 <= self.stride <= self.window - 1:
            raise ValueError(f"stride must be in [1, window-1]: {self.stride}")
        if not 1 <= self.degree < self.window:
            raise ValueError(f"degree must be in [1, window): {self.degree}")


@dataclass
class BezierWindowFit:
    """Fit result for one window: evaluation parameters over every window
    frame, fitting parameters/frames actually used, and per-joint control
    points (NaN for joints with too few usable points)."""

    frames: np.ndarray  # (w,) frame indices covered by the window
    taus: np.ndarray  # (w,) evaluation parameters, 0 at the first frame, 1 at the last
    source_frames: np.ndarray  # (q,) frames that supplied fitting points
    fit_taus: np.ndarray  # (q,)
    control_points: np.ndarray  # (17, degree+1, 2)


def detect_outliers(
    sequence: KeypointSequence, cuts: Iterable[int], cfg: OutlierConfig
) -> list[int]:
    """Frames where at least min_flagged_joints joints sit implausibly far
    from their running median.

    Per joint and coordinate, a value deviating from the window median by
    more than mad_sigmas sigma-equivalents (MAD * 1.4826, floored) flags the
    joint. Windows never span a cut; manual frames are never flagged but do
    inform the medians.
    """
    flagged: list[int] = []
    manual = sequence.manual_mask()
    for region in split_regions(sequence.frames, cuts):
        coords = sequence.coords[region]  # (t, 17, 2)
        counts = np.zeros((len(region), NUM_JOINTS), dtype=int)
        for j in range(NUM_JOINTS):
            for axis in range(2):
                series = np.ascontiguousarray(coords[:, j, axis])
                med, mad = rolling_median_mad(series, cfg.median_window)
                limit = cfg.mad_sigmas * MAD_TO_SIGMA * np.maximum(mad, MAD_FLOOR)
                deviant = np.abs(series - med) > limit  # NaNs compare False
                counts[:, j] |= deviant
        bad = counts.sum(axis=1) >= cfg.min_flagged_joints
        bad &= ~manual[region]
        flagged.extend(int(f) for f in sequence.frames[region][bad])
    return sorted(flagged)


def bernstein_matrix(degree: int, taus) -> np.ndarray:
    """Bernstein basis evaluations: entry (i, j) is C(d, j) (1-t_i)^(d-j) t_i^j."""
    t = np.asarray(taus, dtype=float)
    if t.ndim != 1:
        raise ValueError(f"taus must be 1-D, got shape {t.shape}")
    if t.size and (t.min() < 0.0 or t.max() > 1.0):
        raise ValueError("all curve parameters must lie in [0, 1]")
    j = np.arange(degree + 1)
    coef = np.array([math.comb(degree, k) for k in j], dtype=float)
    return coef * np.power.outer(1.0 - t, degree - j) * np.power.outer(t, j)


def fit_bezier(points, taus, degree: int) -> np.ndarray:
    """Least-squares control points of a Bernstein-basis curve through the
    given (q, 2) samples via the Moore-Penrose pseudoinverse.

    Underdetermined fits (q < degree+1) return the minimum-norm exact
    interpolant.
    """
    pts = np.asarray(points, dtype=float)
    t = np.asarray(taus, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] != t.shape[0]:
        raise ValueError(f"points {pts.shape} and taus {t.shape} must align as (q, 2) / (q,)")
    if pts.shape[0] < 2:
        raise ValueError("fitting needs at least 2 points")
    m = bernstein_matrix(degree, t)
    return np.linalg.pinv(m) @ pts


def _window_starts(length: int, window: int, stride: int) -> list[int]:
    # The final window anchors at the region end so it keeps full size;
    # a short tail would make high-degree fits badly underdetermined.
    starts = []
    s = 0
    while s + window - 1 < length - 1:
        starts.append(s)
        s += stride
    tail = max(0, length - window)
    if not starts or starts[-1] != tail:
        starts.append(tail)
    return starts


def fit_window(
    frames: np.ndarray, coords: np.ndarray, usable: np.ndarray, cfg: BezierConfig
) -> BezierWindowFit:
    """Fit every joint's trajectory over one window of contiguous frames.

    frames: (w,) indices; coords: (w, 17, 2) with NaN rows on unusable
    frames; usable: (w,) bool. Joints fall back to NaN control points when
    fewer than 2 usable samples exist.
    """
    denom = float(frames[-1] - frames[0])
    taus = (frames - frames[0]) / denom
    fit_taus = taus[usable]
    control = np.full((NUM_JOINTS, cfg.degree + 1, 2), np.nan)
    if usable.sum() >= 2:
        basis_pinv = np.linalg.pinv(bernstein_matrix(cfg.degree, fit_taus))
        for j in range(NUM_JOINTS):
            pts = coords[usable, j, :]
            if np.isfinite(pts).all():
                control[j] = basis_pinv @ pts
            else:
                finite = np.isfinite(pts).all(axis=1)
                if finite.sum() >= 2:
                    control[j] = fit_bezier(pts[finite], fit_taus[finite], cfg.degree)
    return BezierWindowFit(
        frames=frames,
        taus=taus,
        source_frames=frames[usable],
        fit_taus=fit_taus,
        control_points=control,
    )


def interpolate_sequence(
    sequence: KeypointSequence, cuts: Iterable[int], cfg: BezierConfig
) -> KeypointSequence:
    """Replace every frame's pose with windowed least-squares curve values.

    Windows of cfg.window frames slide with cfg.stride inside each region
    between cuts; frames covered by several windows average their curve
    values. Output provenance is interpolated everywhere except input
    manual frames, whose original coordinates ride along in
    manual_originals. Joints with fewer than 2 usable points in every
    covering window stay missing.
    """
    out_coords = np.zeros_like(sequence.coords)
    out_counts = np.zeros((len(sequence), NUM_JOINTS, 1))
    usable_all = ~sequence.missing_mask()

    for region in split_regions(sequence.frames, cuts):
        frames = sequence.frames[region]
        if (np.diff(frames) != 1).any():
            raise ValueError("each region must cover contiguous frames")
        if usable_all[region].sum() < 2:
            raise ValueError(
                f"region {frames[0]}..{frames[-1]} has fewer than 2 usable frames"
            )
        for s in _window_starts(len(region), cfg.window, cfg.stride):
            win = region[s : s + cfg.window]
            fit = fit_window(sequence.frames[win], sequence.coords[win], usable_all[win], cfg)
            basis = bernstein_matrix(cfg.degree, fit.taus)
            for j in range(NUM_JOINTS):
                if not np.isfinite(fit.control_points[j]).all():
                    log.warning(
                        "window %d..%d joint %d: fewer than 2 usable points, left missing",
                        fit.frames[0],
                        fit.frames[-1],
                        j,
                    )
                    continue
                values = basis @ fit.control_points[j]
                out_coords[win, j, :] += values
                out_counts[win, j, :] += 1.0

    covered = out_counts[:, :, 0] > 0
    with np.errstate(invalid="ignore"):
        out_coords = np.where(covered[:, :, None], out_coords / np.maximum(out_counts, 1.0), np.nan)

    provenance = []
    for i, p in enumerate(sequence.provenance):
        if not covered[i].any():
            provenance.append(Provenance.MISSING)
        elif p is Provenance.MANUAL:
            provenance.append(Provenance.MANUAL)
        else:
            provenance.append(Provenance.INTERPOLATED)

    originals = dict(sequence.manual_originals)
    for i, p in enumerate(sequence.provenance):
        if p is Provenance.MANUAL:
            originals[int(sequence.frames[i])] = sequence.coords[i].copy()
    return KeypointSequence(
        sequence.frames.copy(),
        out_coords,
        provenance,
        sequence.labelling_score.copy(),
        originals,
    )
