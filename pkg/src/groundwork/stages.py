"""Stage orchestration over a workspace: filter -> track -> select ->
refine, plus metrics and stats. Every stage is a pure function of its
input files and config, persisted atomically, so re-runs are byte-identical."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Optional

import numpy as np

from groundwork import workspace as ws_mod
from groundwork.filtering import filter_frame
from groundwork.metrics import (
    Segment,
    beat_alignment_score,
    beat_dtw_cost,
    beat_dtw_cost_normalized,
    element_distribution,
    kinematic_beats,
    movement_diversity,
    pose_diversity,
    pose_fid,
    sequence_mae,
)
from groundwork.refine import detect_outliers, interpolate_sequence
from groundwork.selection import (
    FrameStatus,
    LabelManifestEntry,
    apply_discount,
    mark_missing,
    merge_manual,
)
from groundwork.sequence import KeypointSequence, Provenance
from groundwork.tracking import (
    ActiveSelection,
    OverrideSegment,
    Track,
    apply_overrides,
    build_tracks,
    select_active_dancer,
)
from groundwork.workspace import (
    MissingDependencyError,
    PipelineConfig,
    VideoWorkspace,
    WorkspaceError,
    candidate_from_record,
    candidate_to_record,
    load_detections,
    load_manifest,
    load_manual_annotations,
    load_meta,
    load_segments,
    load_sequence,
    load_shots,
    save_detections,
    save_manifest,
    write_json,
)

log = logging.getLogger(__name__)

STAGES = ("filter", "track", "select", "refine", "metrics", "stats")


class PendingAnnotationsError(RuntimeError):
    """Refine cannot proceed while manifest entries await the annotators."""

    def __init__(self, video_id: str, frames: list[int]):
        self.frames = frames
        super().__init__(
            f"video {video_id}: manifest entries pending for frames {frames}; "
            "annotate them (service or manual/ files) and re-run refine"
        )


def segment_id(seg: Segment) -> str:
    return f"{seg.sequence_id}_{seg.start_frame:06d}"


def _require(path: Path, producer: str) -> None:
    if not path.exists():
        raise MissingDependencyError(f"{path} not found; run the '{producer}' stage first")


def _check_unlocked(ws: VideoWorkspace) -> None:
    pid = ws.locked_by()
    if pid is not None:
        raise WorkspaceError(
            f"video {ws.video_id}: manifest is held by the annotation service (pid {pid}); "
            "stop it before running select/refine"
        )


def _element_segments(segments: list[Segment]) -> list[Segment]:
    return [s for s in segments if not s.override]


def _shot_cuts(shots: list[tuple[int, int]]) -> list[int]:
    return [start for start, _ in shots]


def _segment_regions(seg: Segment, shots: list[tuple[int, int]]) -> list[tuple[int, int]]:
    """Split a segment span at shot starts; pieces are inclusive spans."""
    cuts = [c for c in _shot_cuts(shots) if seg.start_frame < c <= seg.end_frame]
    bounds = [seg.start_frame, *cuts, seg.end_frame + 1]
    return [(a, b - 1) for a, b in zip(bounds, bounds[1:]) if a <= b - 1]


# --- stage: filter -----------------------------------------------------------


def run_filter(ws: VideoWorkspace, cfg: PipelineConfig) -> None:
    detections_path = ws.dir / "detections.jsonl"
    if not detections_path.exists():
        raise WorkspaceError(f"{detections_path}: input file not found")
    frames = load_detections(detections_path)
    filtered = [filter_frame(fd, cfg.filter) for fd in frames]
    save_detections(ws.stage_path("filter"), [fd for fd in filtered if fd.candidates])


# --- stage: track ------------------------------------------------------------


def run_track(ws: VideoWorkspace, cfg: PipelineConfig) -> None:
    _require(ws.stage_path("filter"), "filter")
    frames = load_detections(ws.stage_path("filter"))
    if not frames:
        raise WorkspaceError(f"video {ws.video_id}: no candidates survived filtering")
    tracks = build_tracks(frames, cfg.tracker)
    selection = select_active_dancer(tracks)
    segments = load_segments(ws.dir / "segments.json")
    overrides = [
        OverrideSegment(s.start_frame, s.end_frame) for s in segments if s.override
    ]
    selection = apply_overrides(selection, sorted(overrides, key=lambda o: o.start_frame), tracks)

    doc = {
        "tracks": [
            {
                "track_id": t.track_id,
                "entries": [candidate_to_record(c) for _, c in t.entries],
            }
            for t in tracks
        ],
        "selection": [
            {
                "frame": f,
                "track_id": selection.get(f)[0],
                "candidate": candidate_to_record(selection.get(f)[1]),
            }
            for f in selection.frames()
        ],
    }
    write_json(ws.stage_path("track"), doc)


def _load_selection(ws: VideoWorkspace) -> ActiveSelection:
    path = ws.stage_path("track")
    with open(path) as f:
        doc = json.load(f)
    choices = {}
    for i, rec in enumerate(doc["selection"]):
        cand = candidate_from_record(rec["candidate"], f"{path}:selection[{i}]")
        choices[int(rec["frame"])] = (int(rec["track_id"]), cand)
    return ActiveSelection(choices)


def _load_tracks(ws: VideoWorkspace) -> list[Track]:
    path = ws.stage_path("track")
    with open(path) as f:
        doc = json.load(f)
    tracks = []
    for i, rec in enumerate(doc["tracks"]):
        entries = tuple(
            (c["frame"], candidate_from_record(c, f"{path}:tracks[{i}]"))
            for c in rec["entries"]
        )
        tracks.append(Track(int(rec["track_id"]), entries))
    return tracks


# --- stage: select -----------------------------------------------------------


def run_select(ws: VideoWorkspace, cfg: PipelineConfig) -> None:
    _require(ws.stage_path("track"), "track")
    _check_unlocked(ws)
    selection = _load_selection(ws)
    shots = load_shots(ws.dir / "shots.json")
    segments = _element_segments(load_segments(ws.dir / "segments.json"))
    if not segments:
        raise WorkspaceError(f"video {ws.video_id}: no dance segments to process")

    regions = []
    must_label: set[int] = set()
    for seg in segments:
        for start, end in _segment_regions(seg, shots):
            statuses = mark_missing(selection, cfg.selector, frames=list(range(start, end + 1)))
            statuses = apply_discount(statuses, cfg.selector)
            must_label.update(f for f, s in statuses.items() if s is FrameStatus.MUST_LABEL)
            regions.append(
                {
                    "segment_id": segment_id(seg),
                    "start_frame": start,
                    "end_frame": end,
                    "statuses": {str(f): statuses[f].value for f in sorted(statuses)},
                }
            )

    # Regenerate pending low_score entries; annotated work and outlier
    # entries found by refine are preserved.
    existing = {e.frame: e for e in load_manifest(ws.manifest_path) if e.video_id == ws.video_id}
    entries = [e for e in existing.values() if e.status == "done" or e.reason == "outlier"]
    covered = {e.frame for e in entries}
    entries.extend(
        LabelManifestEntry(ws.video_id, f, "low_score")
        for f in sorted(must_label - covered)
    )
    save_manifest(ws.manifest_path, entries)
    write_json(ws.stage_path("select"), {"regions": regions})


# --- stage: refine -----------------------------------------------------------


def _complete_from_manual_files(ws: VideoWorkspace) -> list[LabelManifestEntry]:
    """Fill pending manifest entries from manual/<frame>.json submissions."""
    entries = load_manifest(ws.manifest_path)
    manual = load_manual_annotations(ws.dir)
    changed = False
    completed = []
    for e in entries:
        if e.status == "pending" and e.video_id == ws.video_id and e.frame in manual:
            completed.append(
                LabelManifestEntry(e.video_id, e.frame, e.reason, "done", manual[e.frame])
            )
            changed = True
        else:
            completed.append(e)
    if changed:
        save_manifest(ws.manifest_path, completed)
    return completed


def _demote_frames(seq: KeypointSequence, frames: list[int]) -> KeypointSequence:
    coords = seq.coords.copy()
    provenance = list(seq.provenance)
    scores = seq.labelling_score.copy()
    for f in frames:
        i = seq.index_of(f)
        coords[i] = np.nan
        provenance[i] = Provenance.MISSING
        scores[i] = np.nan
    return KeypointSequence(seq.frames, coords, provenance, scores, seq.manual_originals)


def run_refine(ws: VideoWorkspace, cfg: PipelineConfig) -> None:
    _require(ws.stage_path("track"), "track")
    _require(ws.stage_path("select"), "select")
    _check_unlocked(ws)
    manifest = _complete_from_manual_files(ws)
    own = [e for e in manifest if e.video_id == ws.video_id]
    pending = sorted(e.frame for e in own if e.status == "pending")
    if pending:
        raise PendingAnnotationsError(ws.video_id, pending)
    done_frames = {e.frame for e in own if e.status == "done"}

    selection = _load_selection(ws)
    shots = load_shots(ws.dir / "shots.json")
    meta = load_meta(ws.dir, ws.video_id)
    with open(ws.stage_path("select")) as f:
        select_doc = json.load(f)

    by_segment: dict[str, list[dict]] = {}
    for region in select_doc["regions"]:
        by_segment.setdefault(region["segment_id"], []).append(region)

    cuts = _shot_cuts(shots)
    merged: dict[str, KeypointSequence] = {}
    new_outliers: set[int] = set()
    for seg_id, regions in by_segment.items():
        statuses: dict[int, FrameStatus] = {}
        for region in regions:
            for key, value in region["statuses"].items():
                statuses[int(key)] = FrameStatus(value)
        # frames annotated in earlier rounds (including outlier rounds)
        # merge as manual regardless of their automatic status
        for f in list(statuses):
            if f in done_frames:
                statuses[f] = FrameStatus.MUST_LABEL
        seq = merge_manual(selection, statuses, own)
        outliers = detect_outliers(seq, cuts, cfg.outlier)
        if outliers:
            if cfg.outlier_policy == "annotate":
                new_outliers.update(outliers)
            else:
                seq = _demote_frames(seq, outliers)
        merged[seg_id] = seq

    if new_outliers:
        entries = manifest + [
            LabelManifestEntry(ws.video_id, f, "outlier") for f in sorted(new_outliers)
        ]
        save_manifest(ws.manifest_path, entries)
        raise PendingAnnotationsError(ws.video_id, sorted(new_outliers))

    for seg_id, seq in merged.items():
        final = interpolate_sequence(seq, cuts, cfg.bezier)
        write_json(
            ws.stage_path("refine") / f"{seg_id}.json",
            ws_mod.sequence_to_document(final, ws.video_id, seg_id, meta.fps),
        )


# --- stage: metrics / stats ----------------------------------------------------


def _load_final_sequences(ws: VideoWorkspace) -> list[tuple[str, KeypointSequence, float]]:
    seq_dir = ws.stage_path("refine")
    _require(seq_dir, "refine")
    out = []
    for path in sorted(seq_dir.glob("*.json")):
        seq, _video, seg_id, fps = load_sequence(path)
        out.append((seg_id, seq, fps))
    if not out:
        raise MissingDependencyError(f"{seq_dir}: no sequence files; run the 'refine' stage first")
    return out


def compute_metrics_report(ws: VideoWorkspace, cfg: PipelineConfig) -> dict:
    finals = _load_final_sequences(ws)
    meta = load_meta(ws.dir, ws.video_id)
    shots = load_shots(ws.dir / "shots.json")
    segments = _element_segments(load_segments(ws.dir / "segments.json"))
    music = ws_mod.load_beats(ws.dir / "beats.json")

    sequences = [(seq, meta) for _seg_id, seq, _fps in finals]
    cuts = [_shot_cuts(shots)] * len(sequences)
    scalar, per_axis = pose_diversity(sequences)
    report: dict = {
        "movement": movement_diversity(sequences, cuts),
        "pose_diversity": scalar,
        "pose_diversity_xy": [float(per_axis[0]), float(per_axis[1])],
    }

    # distance between two deterministic halves of the final pose set
    even = np.concatenate([seq.coords for i, (_, seq, _) in enumerate(finals) if i % 2 == 0])
    odd = np.concatenate([seq.coords for i, (_, seq, _) in enumerate(finals) if i % 2 == 1]) if len(finals) > 1 else np.empty((0, 17, 2))
    if min(len(even), len(odd)) > 34:
        report["pose_fid"] = pose_fid(even, odd)

    if len(music):
        alignments, raws, norms = [], [], []
        for _seg_id, seq, _fps in finals:
            if len(seq) < 4:
                continue
            kin = kinematic_beats(seq, meta, cfg.metrics.prominence_k)
            if len(kin) == 0:
                continue
            alignments.append(beat_alignment_score(kin, music, cfg.metrics.sigma))
            raws.append(beat_dtw_cost(kin, music))
            norms.append(beat_dtw_cost_normalized(kin, music))
        if alignments:
            report["beat_alignment"] = float(np.mean(alignments))
            report["beat_dtw_raw"] = float(np.mean(raws))
            report["beat_dtw_normalized"] = float(np.mean(norms))

    maes = []
    for seg_id, seq, _fps in finals:
        gt_path = ws.dir / "gt" / f"{seg_id}.json"
        if gt_path.exists():
            gt_seq, _, _, _ = load_sequence(gt_path)
            maes.append(sequence_mae(seq, gt_seq))
    if maes:
        report["mae"] = float(np.mean(maes))

    dist = element_distribution(segments)
    report["element_distribution"] = {
        "per_order": {str(k): v for k, v in dist.per_order.items()},
        "overall": dist.overall,
    }
    return report


def run_metrics(ws: VideoWorkspace, cfg: PipelineConfig, out: Optional[Path] = None) -> dict:
    report = compute_metrics_report(ws, cfg)
    write_json(out or ws.stage_path("metrics"), report)
    return report


def run_stats(ws: VideoWorkspace, cfg: PipelineConfig, out: Optional[Path] = None) -> dict:
    segments = _element_segments(load_segments(ws.dir / "segments.json"))
    dist = element_distribution(segments)
    report = {
        "element_distribution": {
            "per_order": {str(k): v for k, v in dist.per_order.items()},
            "overall": dist.overall,
        }
    }
    write_json(out or ws.stage_path("stats"), report)
    return report


def run_stage(
    root: Path,
    video_id: str,
    stage: str,
    cfg: Optional[PipelineConfig] = None,
    out: Optional[Path] = None,
) -> None:
    """Run one pipeline stage for one video, enforcing the dependency chain."""
    cfg = cfg or PipelineConfig()
    ws = VideoWorkspace(Path(root), video_id)
    if stage == "filter":
        run_filter(ws, cfg)
    elif stage == "track":
        run_track(ws, cfg)
    elif stage == "select":
        run_select(ws, cfg)
    elif stage == "refine":
        run_refine(ws, cfg)
    elif stage == "metrics":
        run_metrics(ws, cfg, out)
    elif stage == "stats":
        run_stats(ws, cfg, out)
    else:
        raise ValueError(f"unknown stage '{stage}'; expected one of {STAGES}")
