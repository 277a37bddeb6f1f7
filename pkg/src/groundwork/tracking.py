"""Link filtered candidates into person tracks, score tracks by box-area
movement, pick the active dancer per frame, and apply manual overrides for
spans where the automatic choice was wrong."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Optional, Union

from groundwork.filtering import FrameDetections
from groundwork.model import PoseCandidate, iou


@dataclass(frozen=True)
class Track:
    """Time-ordered chain of candidates believed to be one person."""

    track_id: int
    entries: tuple[tuple[int, PoseCandidate], ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        frames = [f for f, _ in self.entries]
        if any(b <= a for a, b in zip(frames, frames[1:])):
            raise ValueError(f"track {self.track_id} frames must be strictly increasing")

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def first_frame(self) -> int:
        return self.entries[0][0]

    @property
    def last_frame(self) -> int:
        return self.entries[-1][0]


@dataclass(frozen=True)
class TrackerConfig:
    link_iou: float = 0.4
    lookahead: int = 10

    def __post_init__(self):
        if not 0.0 <= self.link_iou <= 1.0:
            raise ValueError(f"link_iou must be in [0, 1]: {self.link_iou}")
        if self.lookahead < 1:
            raise ValueError(f"lookahead must be >= 1: {self.lookahead}")


@dataclass(frozen=True)
class OverrideSegment:
    """Span where the automatic active-dancer choice must be replaced.

    excluded_track: a concrete track id, or "auto" to exclude whatever
    track the selection had chosen within the span.
    """

    start_frame: int
    end_frame: int
    excluded_track: Union[int, Literal["auto"]] = "auto"

    def __post_init__(self):
        if self.start_frame > self.end_frame:
            raise ValueError(f"override span start {self.start_frame} > end {self.end_frame}")


class ActiveSelection:
    """Per-frame choice of (track_id, candidate) for the active dancer."""

    def __init__(self, choices: dict[int, tuple[int, PoseCandidate]]):
        self.choices = dict(choices)

    def get(self, frame: int) -> Optional[tuple[int, PoseCandidate]]:
        return self.choices.get(frame)

    def frames(self) -> list[int]:
        """Covered frames in ascending order."""
        return sorted(self.choices)

    def __len__(self) -> int:
        return len(self.choices)

    def __eq__(self, other) -> bool:
        return isinstance(other, ActiveSelection) and self.choices == other.choices


class _OpenTrack:
    __slots__ = ("track_id", "entries")

    def __init__(self, track_id: int, frame: int, cand: PoseCandidate):
        self.track_id = track_id
        self.entries: list[tuple[int, PoseCandidate]] = [(frame, cand)]

    @property
    def last(self) -> tuple[int, PoseCandidate]:
        return self.entries[-1]


def build_tracks(frames: list[FrameDetections], cfg: TrackerConfig) -> list[Track]:
    """Greedy forward linking over box IOU with a bounded lookahead.

    A track whose last box sits at frame t may absorb a candidate at the
    first frame in (t, t + lookahead] holding a box with iou > link_iou;
    among several it takes the highest-iou one (ties by box_score, then
    input order). Every candidate lands in exactly one track; unlinked
    candidates open new tracks. When tracks contend for one candidate the
    older track (lower id) wins.
    """
    order = [fd.frame for fd in frames]
    if any(b <= a for a, b in zip(order, order[1:])):
        raise ValueError("frames must be sorted by strictly increasing index")

    open_tracks: list[_OpenTrack] = []
    done: list[_OpenTrack] = []
    next_id = 0
    for fd in frames:
        f = fd.frame
        still_open: list[_OpenTrack] = []
        for tr in open_tracks:
            (done if f - tr.last[0] > cfg.lookahead else still_open).append(tr)
        open_tracks = still_open

        available = list(enumerate(fd.candidates))
        for tr in open_tracks:
            last_frame, last_cand = tr.last
            if last_frame >= f:
                continue
            best_pos = None
            best_key = None
            for pos, (idx, cand) in enumerate(available):
                v = iou(last_cand.box, cand.box)
                if v > cfg.link_iou:
                    key = (v, cand.box_score, -idx)
                    if best_key is None or key > best_key:
                        best_key, best_pos = key, pos
            if best_pos is not None:
                _, cand = available.pop(best_pos)
                tr.entries.append((f, cand))
        for _, cand in available:
            open_tracks.append(_OpenTrack(next_id, f, cand))
            next_id += 1

    finished = sorted(done + open_tracks, key=lambda tr: tr.track_id)
    return [Track(tr.track_id, tuple(tr.entries)) for tr in finished]


def _area_changes(entries) -> list[float]:
    areas = [cand.box.area for _, cand in entries]
    return [abs(b - a) for a, b in zip(areas, areas[1:])]


def track_movement_score(track: Track) -> float:
    """Mean absolute box-area change per linked transition (px^2).

    The mean (not the sum) keeps long-lived static audience tracks from
    outscoring short dynamic ones on duration alone. Tracks with fewer
    than 2 entries score 0.
    """
    changes = _area_changes(track.entries)
    if not changes:
        return 0.0
    return sum(changes) / len(changes)


def select_active_dancer(tracks: list[Track]) -> ActiveSelection:
    """Per frame, choose the candidate from the highest-movement track
    covering that frame; ties break by longer track, then lower id."""
    if not tracks or all(len(t) == 0 for t in tracks):
        raise ValueError("cannot select an active dancer from empty tracks")
    scores = {t.track_id: track_movement_score(t) for t in tracks}
    lengths = {t.track_id: len(t) for t in tracks}
    choices: dict[int, tuple[int, PoseCandidate]] = {}
    for track in tracks:
        for frame, cand in track.entries:
            incumbent = choices.get(frame)
            if incumbent is not None:
                inc_id = incumbent[0]
                if (scores[inc_id], lengths[inc_id], -inc_id) >= (
                    scores[track.track_id],
                    lengths[track.track_id],
                    -track.track_id,
                ):
                    continue
            choices[frame] = (track.track_id, cand)
    return ActiveSelection(choices)


def apply_overrides(
    selection: ActiveSelection,
    overrides: list[OverrideSegment],
    tracks: list[Track],
) -> ActiveSelection:
    """Re-pick the active dancer inside each override span.

    The excluded track's candidates are dropped and the best remaining
    track (movement score restricted to the span) substitutes where it has
    entries; span frames with no alternative become uncovered.
    """
    spans = sorted((o.start_frame, o.end_frame) for o in overrides)
    for (_, e1), (s2, _) in zip(spans, spans[1:]):
        if s2 <= e1:
            raise ValueError(f"override segments overlap near frames {s2}..{e1}")

    by_id = {t.track_id: t for t in tracks}
    choices = dict(selection.choices)
    for seg in overrides:
        span = range(seg.start_frame, seg.end_frame + 1)
        if seg.excluded_track == "auto":
            excluded = {choices[f][0] for f in span if f in choices}
        else:
            excluded = {seg.excluded_track}

        best_id = None
        best_key = None
        for track in tracks:
            if track.track_id in excluded:
                continue
            restricted = [(f, c) for f, c in track.entries if seg.start_frame <= f <= seg.end_frame]
            if not restricted:
                continue
            changes = _area_changes(restricted)
            score = sum(changes) / len(changes) if changes else 0.0
            key = (score, len(restricted), -track.track_id)
            if best_key is None or key > best_key:
                best_key, best_id = key, track.track_id

        for f in span:
            choices.pop(f, None)
        if best_id is not None:
            for f, cand in by_id[best_id].entries:
                if seg.start_frame <= f <= seg.end_frame:
                    choices[f] = (best_id, cand)
    return ActiveSelection(choices)
