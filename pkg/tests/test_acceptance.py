"""Acceptance suite: one test per acceptance criterion, each printing a
pass/fail line with its runtime. Run with `pytest tests/test_acceptance.py -s`
to see the lines as they complete."""

import hashlib
import itertools
import json
import shutil
import time
from pathlib import Path

import numpy as np
import pytest

from groundwork.metrics import (
    BeatTrack,
    VideoMeta,
    beat_alignment_score,
    beat_dtw_cost,
    movement_diversity,
    pose_diversity,
    pose_fid,
)
from groundwork.model import NUM_JOINTS
from groundwork.refine import (
    BezierConfig,
    OutlierConfig,
    bernstein_matrix,
    detect_outliers,
    fit_bezier,
    interpolate_sequence,
)
from groundwork.selection import FrameStatus, SelectorConfig, apply_discount
from groundwork.sequence import KeypointSequence, Provenance
from groundwork.stages import run_stage
from groundwork.tracking import TrackerConfig, build_tracks, select_active_dancer

from conftest import frame_of, make_candidate

FIXTURES = Path(__file__).parent / "fixtures"
META = VideoMeta("bench", fps=25.0, frame_width=1920, frame_height=1080)


class _Criterion:
    def __init__(self, name: str, budget: float):
        self.name, self.budget = name, budget

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.start
        status = "PASS" if exc_type is None else "FAIL"
        print(f"{status} {self.name} ({elapsed:.1f}s, budget {self.budget:.0f}s)")
        if exc_type is None:
            assert elapsed < self.budget, f"{self.name}: {elapsed:.1f}s over budget {self.budget}s"
        return False


def make_seq(coords, provenance=None):
    coords = np.asarray(coords, dtype=float)
    if provenance is None:
        provenance = [
            Provenance.MISSING if not np.isfinite(coords[i]).all() else Provenance.AUTOMATIC
            for i in range(coords.shape[0])
        ]
    return KeypointSequence(np.arange(coords.shape[0]), coords, provenance)


# --- criterion: Bernstein/Bezier core ------------------------------------------


def test_bernstein_bezier_core():
    with _Criterion("bernstein/bezier core", budget=5.0):
        rng = np.random.default_rng(1)
        for _ in range(1000):
            degree = int(rng.integers(0, 11))
            taus = rng.random(int(rng.integers(1, 40)))
            rows = bernstein_matrix(degree, taus)
            assert np.abs(rows.sum(axis=1) - 1.0).max() < 1e-12

        for _ in range(50):
            degree = int(rng.integers(1, 8))
            coef = rng.uniform(-4, 4, (degree + 1, 2))
            taus = np.sort(rng.random(20))
            taus[0], taus[-1] = 0.0, 1.0
            pts = np.stack([np.polyval(coef[::-1, k], taus) for k in range(2)], axis=1)
            control = fit_bezier(pts, taus, degree=7)
            eval_taus = np.linspace(0, 1, 60)
            truth = np.stack([np.polyval(coef[::-1, k], eval_taus) for k in range(2)], axis=1)
            assert np.abs(bernstein_matrix(7, eval_taus) @ control - truth).max() < 1e-6


# --- criterion: labelling discount ----------------------------------------------


def _feasible_mask(mask: int, length: int, cfg: SelectorConfig) -> bool:
    if mask & (mask >> 1) & (mask >> 2):
        return False
    window_bits = (1 << cfg.window) - 1
    for i in range(max(1, length - cfg.window + 1)):
        if ((mask >> i) & window_bits).bit_count() > cfg.max_missing_per_window:
            return False
    return True


def _min_promotions_mask(missing: int, length: int, cfg: SelectorConfig) -> int:
    # max kept = max popcount over feasible submasks of the missing set
    best_kept = 0
    sub = missing
    while True:
        if sub.bit_count() > best_kept and _feasible_mask(sub, length, cfg):
            best_kept = sub.bit_count()
        if sub == 0:
            break
        sub = (sub - 1) & missing
    return missing.bit_count() - best_kept


def _statuses_from_mask(mask: int, length: int) -> dict[int, FrameStatus]:
    return {
        i: FrameStatus.MISSING if (mask >> i) & 1 else FrameStatus.GOOD_AUTOMATIC
        for i in range(length)
    }


def _check_constraints_fast(missing: np.ndarray, cfg: SelectorConfig) -> bool:
    x = missing.astype(int)
    if len(x) >= 3 and np.convolve(x, np.ones(3, dtype=int), "valid").max() > cfg.max_consecutive_missing:
        return False
    if x.sum() and np.convolve(x, np.ones(cfg.window, dtype=int), "same").max() > cfg.max_missing_per_window:
        return False
    return True


def test_labelling_discount():
    with _Criterion("labelling discount", budget=60.0):
        cfg = SelectorConfig()
        length = 12
        total_greedy = total_min = worst_gap = 0
        for mask in range(1 << length):
            out = apply_discount(_statuses_from_mask(mask, length), cfg)
            remaining = np.array([out[i] is FrameStatus.MISSING for i in range(length)])
            assert _check_constraints_fast(remaining, cfg), f"pattern {mask:012b}"
            assert apply_discount(out, cfg) == out
            greedy = sum(out[i] is FrameStatus.MUST_LABEL for i in range(length))
            minimum = _min_promotions_mask(mask, length, cfg)
            assert greedy >= minimum
            total_greedy += greedy
            total_min += minimum
            worst_gap = max(worst_gap, greedy - minimum)
        print(
            f"  exhaustive 2^12: greedy promotions {total_greedy} vs brute-force "
            f"minimum {total_min} (gap {total_greedy - total_min}, worst per-pattern {worst_gap})"
        )

        rng = np.random.default_rng(2)
        for _ in range(10_000):
            density = rng.uniform(0.05, 0.6)
            pattern = rng.random(200) < density
            statuses = {
                i: FrameStatus.MISSING if m else FrameStatus.GOOD_AUTOMATIC
                for i, m in enumerate(pattern)
            }
            out = apply_discount(statuses, cfg)
            remaining = np.array([out[i] is FrameStatus.MISSING for i in range(200)])
            assert _check_constraints_fast(remaining, cfg)
            assert apply_discount(out, cfg) == out


# --- criterion: interpolation benefit --------------------------------------------


def test_interpolation_benefit():
    with _Criterion("interpolation benefit", budget=30.0):
        rng = np.random.default_rng(3)
        t_len = 150
        t = np.arange(t_len)[:, None, None]
        phase = rng.uniform(0, 2 * np.pi, (1, NUM_JOINTS, 2))
        truth = 500 + 50 * np.sin(2 * np.pi * t / 75 + phase) + np.array([1.0, 0.5]) * t
        raw = truth + rng.normal(0, 1.0, truth.shape)
        corrupted = rng.choice(t_len, int(0.24 * t_len), replace=False)
        raw[corrupted] += rng.normal(0, 40, (len(corrupted), NUM_JOINTS, 2))
        manual = corrupted[: int(0.07 * t_len)]

        merged = raw.copy()
        merged[corrupted] = np.nan
        merged[manual] = truth[manual]
        provenance = [Provenance.AUTOMATIC] * t_len
        for f in corrupted:
            provenance[f] = Provenance.MISSING
        for f in manual:
            provenance[f] = Provenance.MANUAL
        out = interpolate_sequence(make_seq(merged, provenance), [], BezierConfig())

        rejected = sorted(set(corrupted) - set(manual))
        mae_raw = np.abs(raw[rejected] - truth[rejected]).mean()
        mae_fit = np.abs(out.coords[rejected] - truth[rejected]).mean()
        print(f"  rejected-frame MAE: raw {mae_raw:.2f}px vs interpolated {mae_fit:.2f}px")
        assert mae_fit <= 0.7 * mae_raw


# --- criterion: tracking -----------------------------------------------------------


def test_tracking():
    with _Criterion("tracking", budget=10.0):
        cfg = TrackerConfig()
        for gap in range(2, 10):
            frames = [frame_of(0, make_candidate(0)), frame_of(gap, make_candidate(gap, x=1.0))]
            assert len(build_tracks(frames, cfg)) == 1, f"gap {gap} should bridge"
        for gap in range(11, 15):
            frames = [frame_of(0, make_candidate(0)), frame_of(gap, make_candidate(gap, x=1.0))]
            assert len(build_tracks(frames, cfg)) == 2, f"gap {gap} should split"

        rng = np.random.default_rng(4)
        correct = 0
        for _ in range(100):
            phase = rng.uniform(0, np.pi)
            idle_w = rng.uniform(15, 35)
            drift = rng.uniform(-0.5, 0.5)
            frames = []
            for f in range(60):
                dancer_w = 60 + rng.uniform(20, 30) * np.sin(0.4 * f + phase)
                dancer = make_candidate(f, x=50 + f * drift, y=0.0, w=dancer_w, h=100,
                                        box_score=0.9)
                idle = make_candidate(f, x=400.0, y=400.0, w=idle_w, h=50, box_score=0.95)
                frames.append(frame_of(f, dancer, idle))
            selection = select_active_dancer(build_tracks(frames, cfg))
            if all(selection.get(f) is not None and selection.get(f)[1].box.y == 0 for f in range(60)):
                correct += 1
        assert correct == 100, f"active dancer picked in {correct}/100 fixtures"


# --- criterion: outlier detection ----------------------------------------------------


def test_outlier_detection():
    with _Criterion("outlier detection", budget=30.0):
        rng = np.random.default_rng(5)
        cfg = OutlierConfig()
        noise_sigma = 1.0
        noise_mad = 0.6745 * noise_sigma
        hits = false_positives = clean_frames = 0
        n_seq, t_len = 1000, 50
        for _ in range(n_seq):
            slopes = rng.uniform(-1, 1, (NUM_JOINTS, 2))
            base = rng.uniform(100, 900, (NUM_JOINTS, 2))
            coords = base + slopes * np.arange(t_len)[:, None, None]
            coords += rng.normal(0, noise_sigma, coords.shape)

            planted = int(rng.integers(5, t_len - 5))
            n_joints = int(rng.integers(6, NUM_JOINTS + 1))
            joints = rng.choice(NUM_JOINTS, n_joints, replace=False)
            magnitude = rng.uniform(10, 20, (n_joints, 2)) * noise_mad
            coords[planted, joints] += np.where(rng.random((n_joints, 2)) < 0.5, -1, 1) * magnitude

            manual_frame = (planted + 10) % t_len
            coords[manual_frame, :8] += 30 * noise_mad
            provenance = [
                Provenance.MANUAL if i == manual_frame else Provenance.AUTOMATIC
                for i in range(t_len)
            ]
            flagged = detect_outliers(make_seq(coords, provenance), [], cfg)
            assert manual_frame not in flagged, "manual frame flagged"
            hits += planted in flagged
            false_positives += sum(1 for f in flagged if f != planted)
            clean_frames += t_len - 2
        recall = hits / n_seq
        fpr = false_positives / clean_frames
        print(f"  recall {recall:.3f}, false-positive rate {fpr:.5f}")
        assert recall >= 0.95
        assert fpr <= 0.01


# --- criterion: FID ---------------------------------------------------------------


def test_fid():
    with _Criterion("pose distribution distance", budget=60.0):
        rng = np.random.default_rng(6)
        poses = rng.uniform(0, 100, (500, NUM_JOINTS, 2))
        assert pose_fid(poses, poses) <= 1e-6

        a = rng.uniform(0, 100, (300, NUM_JOINTS, 2))
        b = rng.uniform(0, 100, (280, NUM_JOINTS, 2)) * 0.8 + 10
        assert abs(pose_fid(a, b) - pose_fid(b, a)) < 1e-8

        # two pinned joints fix every pose's box; the rest are iid gaussian,
        # so the commuting closed form applies on the free axes
        n, scale = 100_000, 10_000.0

        def build(mu, sigma):
            coords = np.empty((n, NUM_JOINTS, 2))
            coords[:, 0] = [0.0, 0.0]
            coords[:, 1] = [scale, scale]
            coords[:, 2:] = rng.normal(mu, sigma, (n, NUM_JOINTS - 2, 2))
            return coords

        mu_a, sigma_a = 4000.0, 300.0
        mu_b, sigma_b = 4600.0, 450.0
        fid = pose_fid(build(mu_a, sigma_a), build(mu_b, sigma_b))
        dims = (NUM_JOINTS - 2) * 2
        closed_form = dims * (((mu_a - mu_b) / scale) ** 2 + ((sigma_a - sigma_b) / scale) ** 2)
        print(f"  fid {fid:.6f} vs closed form {closed_form:.6f}")
        assert fid == pytest.approx(closed_form, rel=0.05)


# --- criterion: beat metrics ---------------------------------------------------------


def _monotone_paths(n: int, m: int) -> np.ndarray:
    paths = []

    def go(i, j, acc):
        acc = acc + [i * m + j]
        if i == n - 1 and j == m - 1:
            paths.append(acc)
            return
        if i + 1 < n:
            go(i + 1, j, acc)
        if j + 1 < m:
            go(i, j + 1, acc)
        if i + 1 < n and j + 1 < m:
            go(i + 1, j + 1, acc)

    go(0, 0, [])
    onehot = np.zeros((len(paths), n * m))
    for p, cells in enumerate(paths):
        onehot[p, cells] = 1.0
    return onehot


def test_beat_metrics():
    with _Criterion("beat metrics", budget=60.0):
        music = BeatTrack(np.arange(1, 12, dtype=float))
        for delta in (0.005, 0.02, 0.07, 0.15, 0.25):
            kin = BeatTrack(np.arange(1, 12) + delta)
            expected = float(np.exp(-(delta**2) / (2 * 0.1**2)))
            assert beat_alignment_score(kin, music) == pytest.approx(expected, abs=1e-9)

        # exhaustive: every pair of tracks with <= 6 beats over a 10-point grid
        grid = [round(0.3 * k, 10) for k in range(10)]
        tracks_by_size = {
            s: [list(c) for c in itertools.combinations(grid, s)] for s in range(1, 7)
        }
        beat_tracks = {
            s: [BeatTrack(np.array(c)) for c in combos] for s, combos in tracks_by_size.items()
        }
        checked = 0
        for na in range(1, 7):
            a_arr = np.array(tracks_by_size[na])  # (Ta, na)
            paths = _monotone_paths(na, na)  # reused when nb == na
            for nb in range(1, 7):
                b_arr = np.array(tracks_by_size[nb])
                onehot = paths if nb == na else _monotone_paths(na, nb)
                costs = np.abs(
                    a_arr[:, None, :, None] - b_arr[None, :, None, :]
                ).reshape(len(a_arr) * len(b_arr), na * nb)
                brute = np.empty(len(costs))
                for lo in range(0, len(costs), 2048):
                    chunk = costs[lo : lo + 2048]
                    brute[lo : lo + len(chunk)] = (chunk @ onehot.T).min(axis=1)
                brute = brute.reshape(len(a_arr), len(b_arr))

                for i, ta in enumerate(beat_tracks[na]):
                    for j, tb in enumerate(beat_tracks[nb]):
                        assert abs(beat_dtw_cost(ta, tb) - brute[i, j]) < 1e-9
                        checked += 1
        print(f"  dtw matched brute-force path enumeration on {checked} track pairs")


# --- criterion: diversity metrics -----------------------------------------------------


def _pinned_scene(t_len):
    return np.tile(np.linspace([0, 0], [100, 100], NUM_JOINTS), (t_len, 1, 1))


def test_diversity_metrics():
    with _Criterion("diversity metrics", budget=30.0):
        constant = make_seq(_pinned_scene(30))
        assert movement_diversity([(constant, META)]) == 0.0
        assert pose_diversity([(constant, META)])[0] == 0.0

        coords = _pinned_scene(21)
        for t in range(21):
            coords[t, 8] = [40.0 + 10.0 * (t % 2), 50.0]
        osc = make_seq(coords)
        assert movement_diversity([(osc, META)]) == pytest.approx(2.5 / NUM_JOINTS, abs=1e-9)
        osc20 = make_seq(coords[:20])
        scalar, pair = pose_diversity([(osc20, META)])
        assert pair[0] == pytest.approx(0.05 / NUM_JOINTS, abs=1e-9)
        assert scalar == pytest.approx(0.05 / NUM_JOINTS / 2, abs=1e-9)

        rng = np.random.default_rng(8)
        walk = make_seq(rng.uniform(0, 30, (40, NUM_JOINTS, 2)).cumsum(axis=0) / 20 + 300)
        moved = make_seq(walk.coords * 5.0 + [700.0, -450.0])
        assert movement_diversity([(moved, META)]) == pytest.approx(
            movement_diversity([(walk, META)]), abs=1e-9
        )
        assert pose_diversity([(moved, META)])[0] == pytest.approx(
            pose_diversity([(walk, META)])[0], abs=1e-9
        )


# --- criterion: end-to-end determinism --------------------------------------------------


def test_end_to_end_determinism(tmp_path):
    with _Criterion("end-to-end determinism", budget=60.0):
        def run_all(root: Path) -> dict[str, str]:
            shutil.copytree(FIXTURES / "workspace", root)
            for stage in ("filter", "track", "select", "refine", "metrics", "stats"):
                run_stage(root, "fixture01", stage)
            return {
                str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
                for p in sorted(root.rglob("*"))
                if p.is_file()
            }

        first = run_all(tmp_path / "run1")
        second = run_all(tmp_path / "run2")
        assert first == second, "pipeline runs are not byte-identical"

        for seg in ("seq1_000000", "seq2_000100"):
            got = (tmp_path / "run1/fixture01/out/sequences" / f"{seg}.json").read_bytes()
            want = (FIXTURES / "golden" / f"{seg}.json").read_bytes()
            assert got == want, f"{seg} deviates from the reference output"
