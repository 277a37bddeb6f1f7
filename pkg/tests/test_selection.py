import numpy as np
import pytest

from groundwork.selection import (
    FrameStatus,
    LabelManifestEntry,
    SelectorConfig,
    apply_discount,
    emit_manifest,
    labelling_score,
    mark_missing,
    merge_manual,
)
from groundwork.sequence import Provenance
from groundwork.tracking import ActiveSelection

from conftest import make_candidate


def statuses_from_pattern(pattern: str, start: int = 0) -> dict[int, FrameStatus]:
    """'.' good, 'x' missing."""
    return {
        start + i: FrameStatus.MISSING if ch == "x" else FrameStatus.GOOD_AUTOMATIC
        for i, ch in enumerate(pattern)
    }


def constraints_ok(missing: list[bool], cfg: SelectorConfig) -> bool:
    """Independent check of both discount constraints over every window."""
    run = 0
    for m in missing:
        run = run + 1 if m else 0
        if run > cfg.max_consecutive_missing:
            return False
    for i in range(len(missing)):
        lo = max(0, i - cfg.window + 1)
        if sum(missing[lo : i + 1]) > cfg.max_missing_per_window:
            return False
    return True


def min_promotions(pattern: list[bool], cfg: SelectorConfig) -> int:
    """Brute-force smallest promotion set keeping the pattern feasible."""
    positions = [i for i, m in enumerate(pattern) if m]
    best = len(positions)
    for mask in range(2 ** len(positions)):
        count = mask.bit_count()
        if count >= best:
            continue
        promoted = {positions[k] for k in range(len(positions)) if mask >> k & 1}
        remaining = [m and i not in promoted for i, m in enumerate(pattern)]
        if constraints_ok(remaining, cfg):
            best = count
    return best


class TestLabellingScore:
    def test_product(self):
        c = make_candidate(0, box_score=0.8, kp_score=0.5)
        assert labelling_score(c) == pytest.approx(0.4, abs=1e-12)

    def test_identity(self):
        assert labelling_score(make_candidate(0, box_score=1.0, kp_score=1.0)) == 1.0

    def test_zero_box_score(self):
        assert labelling_score(make_candidate(0, box_score=0.0, kp_score=0.9)) == 0.0


class TestMarkMissing:
    def _selection(self, scores):
        return ActiveSelection(
            {f: (0, make_candidate(f, box_score=1.0, kp_score=s)) for f, s in enumerate(scores)}
        )

    def test_all_good(self):
        st = mark_missing(self._selection([0.9, 0.8, 0.7]), SelectorConfig())
        assert all(v is FrameStatus.GOOD_AUTOMATIC for v in st.values())

    def test_uncovered_frame_missing(self):
        sel = ActiveSelection({0: (0, make_candidate(0)), 2: (0, make_candidate(2))})
        st = mark_missing(sel, SelectorConfig())
        assert st[1] is FrameStatus.MISSING

    def test_threshold(self):
        st = mark_missing(self._selection([0.9, 0.3, 0.7]), SelectorConfig())
        assert [st[f] for f in range(3)] == [
            FrameStatus.GOOD_AUTOMATIC,
            FrameStatus.MISSING,
            FrameStatus.GOOD_AUTOMATIC,
        ]


class TestApplyDiscount:
    def test_no_missing_no_promotions(self):
        st = statuses_from_pattern("." * 12)
        assert apply_discount(st, SelectorConfig()) == st

    def test_three_consecutive_promotes_third(self):
        st = statuses_from_pattern(".....xxx....")
        out = apply_discount(st, SelectorConfig())
        assert out[5] is FrameStatus.MISSING
        assert out[6] is FrameStatus.MISSING
        assert out[7] is FrameStatus.MUST_LABEL

    def test_window_density_promotions(self):
        # 7 missing inside 10 frames: the 6th and 7th in-window miss each
        # trip the density rule.
        st = statuses_from_pattern("xx.xx.xx.x")
        out = apply_discount(st, SelectorConfig())
        promoted = [f for f, s in out.items() if s is FrameStatus.MUST_LABEL]
        assert promoted == [7, 9]

    def test_exhaustive_length_8(self):
        cfg = SelectorConfig()
        for bits in range(2**8):
            pattern = [(bits >> i) & 1 == 1 for i in range(8)]
            st = {
                i: FrameStatus.MISSING if m else FrameStatus.GOOD_AUTOMATIC
                for i, m in enumerate(pattern)
            }
            out = apply_discount(st, cfg)
            # never demotes, only missing -> must_label
            for f in st:
                if st[f] is FrameStatus.GOOD_AUTOMATIC:
                    assert out[f] is FrameStatus.GOOD_AUTOMATIC
                else:
                    assert out[f] in (FrameStatus.MISSING, FrameStatus.MUST_LABEL)
            remaining = [out[i] is FrameStatus.MISSING for i in range(8)]
            assert constraints_ok(remaining, cfg), pattern
            assert apply_discount(out, cfg) == out  # idempotent
            promoted = sum(out[i] is FrameStatus.MUST_LABEL for i in range(8))
            assert promoted >= min_promotions(pattern, cfg)

    def test_sparse_low_density_untouched(self):
        # runs <= 2 and density <= 5 per 10: nothing to do
        st = statuses_from_pattern("xx...x..x....xx..x.." * 3)
        out = apply_discount(st, SelectorConfig())
        assert out == st

    def test_noncontiguous_range_rejected(self):
        st = {0: FrameStatus.MISSING, 2: FrameStatus.MISSING}
        with pytest.raises(ValueError):
            apply_discount(st, SelectorConfig())


class TestEmitManifest:
    def test_empty(self):
        assert emit_manifest(statuses_from_pattern("...."), "v1", "low_score") == []

    def test_entries_in_frame_order(self):
        st = statuses_from_pattern("...")
        st[12] = FrameStatus.MUST_LABEL
        st[7] = FrameStatus.MUST_LABEL
        entries = emit_manifest(st, "v1", "low_score")
        assert [(e.frame, e.status, e.reason) for e in entries] == [
            (7, "pending", "low_score"),
            (12, "pending", "low_score"),
        ]

    def test_idempotent(self):
        st = statuses_from_pattern("x..")
        st[0] = FrameStatus.MUST_LABEL
        assert emit_manifest(st, "v", "outlier") == emit_manifest(st, "v", "outlier")


class TestMergeManual:
    def _setup(self):
        sel = ActiveSelection({f: (0, make_candidate(f, box_score=0.9, kp_score=0.9)) for f in range(5)})
        statuses = {f: FrameStatus.GOOD_AUTOMATIC for f in range(5)}
        return sel, statuses

    def test_all_automatic_identity(self):
        sel, statuses = self._setup()
        seq = merge_manual(sel, statuses, [])
        assert list(seq.frames) == list(range(5))
        for i in range(5):
            assert seq.provenance[i] is Provenance.AUTOMATIC
            assert np.array_equal(seq.coords[i], sel.get(i)[1].pose.xy())

    def test_manual_frame_takes_submission(self):
        sel, statuses = self._setup()
        statuses[2] = FrameStatus.MUST_LABEL
        pose = np.arange(34, dtype=float).reshape(17, 2)
        entry = LabelManifestEntry("v", 2, "low_score", "done", pose)
        seq = merge_manual(sel, statuses, [entry])
        assert seq.provenance[2] is Provenance.MANUAL
        assert seq.labelling_score[2] == 1.0
        assert np.array_equal(seq.coords[2], pose)

    def test_pending_frame_error_names_frame(self):
        sel, statuses = self._setup()
        statuses[3] = FrameStatus.MUST_LABEL
        with pytest.raises(ValueError, match=r"\[3\]"):
            merge_manual(sel, statuses, [LabelManifestEntry("v", 3, "low_score")])

    def test_missing_frames_stay_missing(self):
        sel, statuses = self._setup()
        statuses[4] = FrameStatus.MISSING
        seq = merge_manual(sel, statuses, [])
        assert seq.provenance[4] is Provenance.MISSING
        assert np.isnan(seq.coords[4]).all()


class TestManifestEntryInvariants:
    def test_pose_only_when_done(self):
        with pytest.raises(ValueError):
            LabelManifestEntry("v", 0, "low_score", "pending", np.zeros((17, 2)))
        with pytest.raises(ValueError):
            LabelManifestEntry("v", 0, "low_score", "done", None)

    def test_pose_shape_checked(self):
        with pytest.raises(ValueError):
            LabelManifestEntry("v", 0, "low_score", "done", np.zeros((16, 2)))
