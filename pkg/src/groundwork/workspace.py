"""Workspace layout, file schemas, and durable serialization.

Layout per video: `<root>/<video_id>/detections.jsonl`, `shots.json`,
`segments.json`, `beats.json` (optional), `meta.json`, `manifest.json`,
`manual/` (one file per labelled frame), and stage outputs under `out/`.
All writers are atomic (temp file + rename, fsynced) and deterministic:
re-serializing unchanged data is byte-identical.
"""

from __future__ import annotations

import json
import logging
import os
import tempfile
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Optional

import numpy as np

from groundwork.filtering import FilterConfig, FrameDetections
from groundwork.metrics import BeatTrack, Movement, Segment, VideoMeta
from groundwork.model import NUM_JOINTS, BBox, Pose, PoseCandidate
from groundwork.selection import LabelManifestEntry, SelectorConfig
from groundwork.refine import BezierConfig, OutlierConfig
from groundwork.sequence import KeypointSequence, Provenance
from groundwork.tracking import TrackerConfig

log = logging.getLogger(__name__)

COORD_DECIMALS = 4
SCORE_DECIMALS = 6


class WorkspaceError(ValueError):
    """A file failed validation; the message carries file/line context."""


class MissingDependencyError(RuntimeError):
    """A stage was run before the stage outputs it consumes exist."""


@dataclass(frozen=True)
class MetricParams:
    sigma: float = 0.1
    prominence_k: float = 1.0
    target_len: int = 32

    def __post_init__(self):
        if self.sigma <= 0 or self.target_len < 2:
            raise ValueError(f"invalid metric parameters: {self}")


@dataclass(frozen=True)
class PipelineConfig:
    filter: FilterConfig = field(default_factory=FilterConfig)
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    selector: SelectorConfig = field(default_factory=SelectorConfig)
    outlier: OutlierConfig = field(default_factory=OutlierConfig)
    bezier: BezierConfig = field(default_factory=BezierConfig)
    metrics: MetricParams = field(default_factory=MetricParams)
    outlier_policy: str = "annotate"  # or "drop": interpolate over outliers

    def __post_init__(self):
        if self.outlier_policy not in ("annotate", "drop"):
            raise ValueError(f"unknown outlier policy: {self.outlier_policy}")

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        sections = {
            "filter": FilterConfig,
            "tracker": TrackerConfig,
            "selector": SelectorConfig,
            "outlier": OutlierConfig,
            "bezier": BezierConfig,
            "metrics": MetricParams,
        }
        kwargs: dict[str, Any] = {}
        for name, value in data.items():
            if name in sections:
                known = {f.name for f in fields(sections[name])}
                extra = set(value) - known
                if extra:
                    raise WorkspaceError(f"unknown {name} config fields: {sorted(extra)}")
                kwargs[name] = sections[name](**value)
            elif name == "outlier_policy":
                kwargs[name] = value
            else:
                raise WorkspaceError(f"unknown config section: {name}")
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: Path) -> "PipelineConfig":
        with open(path) as f:
            return cls.from_dict(json.load(f))


def atomic_write_text(path: Path, text: str) -> None:
    """Write via a temp file in the same directory, fsync, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, path)
        dir_fd = os.open(path.parent, os.O_RDONLY)
        try:
            os.fsync(dir_fd)
        finally:
            os.close(dir_fd)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path: Path, obj) -> None:
    atomic_write_text(path, dump_json(obj))


def _round_coord(v: float) -> float:
    return round(float(v), COORD_DECIMALS)


def _round_score(v: float) -> float:
    return round(float(v), SCORE_DECIMALS)


# --- detections -------------------------------------------------------------


def candidate_to_record(c: PoseCandidate) -> dict:
    # no rounding: candidates must round-trip exactly through stage files
    return {
        "frame": c.frame,
        "model_id": c.model_id,
        "box": [float(v) for v in (c.box.x, c.box.y, c.box.w, c.box.h)],
        "box_score": float(c.box_score),
        "keypoints": [[float(k.x), float(k.y), float(k.score)] for k in c.pose.joints],
    }


def candidate_from_record(rec: dict, where: str) -> PoseCandidate:
    try:
        frame = rec["frame"]
        model_id = rec["model_id"]
        box = rec["box"]
        box_score = rec["box_score"]
        keypoints = rec["keypoints"]
    except (KeyError, TypeError) as e:
        raise WorkspaceError(f"{where}: missing field {e}") from None
    if not isinstance(frame, int) or frame < 0:
        raise WorkspaceError(f"{where}: field 'frame' must be a non-negative integer")
    if not isinstance(box, list) or len(box) != 4:
        raise WorkspaceError(f"{where}: field 'box' must be [x, y, w, h]")
    if not isinstance(keypoints, list) or len(keypoints) != NUM_JOINTS:
        got = len(keypoints) if isinstance(keypoints, list) else type(keypoints).__name__
        raise WorkspaceError(f"{where}: field 'keypoints' must have {NUM_JOINTS} entries, got {got}")
    try:
        pose = Pose.from_array(
            np.array([[k[0], k[1]] for k in keypoints], dtype=float),
            np.array([k[2] for k in keypoints], dtype=float),
        )
        return PoseCandidate(frame, BBox(*map(float, box)), float(box_score), pose, str(model_id))
    except (ValueError, TypeError, IndexError) as e:
        raise WorkspaceError(f"{where}: {e}") from None


def load_detections(path: Path) -> list[FrameDetections]:
    """Parse a detections.jsonl file into per-frame groups, sorted by frame."""
    by_frame: dict[int, list[PoseCandidate]] = {}
    with open(path) as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            where = f"{path}:{line_no}"
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise WorkspaceError(f"{where}: invalid JSON ({e.msg})") from None
            cand = candidate_from_record(rec, where)
            by_frame.setdefault(cand.frame, []).append(cand)
    return [FrameDetections(f, tuple(by_frame[f])) for f in sorted(by_frame)]


def save_detections(path: Path, frames: list[FrameDetections]) -> None:
    lines = [
        json.dumps(candidate_to_record(c), sort_keys=True)
        for fd in sorted(frames, key=lambda fd: fd.frame)
        for c in fd.candidates
    ]
    atomic_write_text(path, "".join(line + "\n" for line in lines))


# --- side files ---------------------------------------------------------------


def load_meta(video_dir: Path, video_id: str) -> VideoMeta:
    path = video_dir / "meta.json"
    if not path.exists():
        raise WorkspaceError(f"{path}: missing; expected fps, frame_width, frame_height")
    with open(path) as f:
        data = json.load(f)
    try:
        return VideoMeta(video_id, float(data["fps"]), int(data["frame_width"]), int(data["frame_height"]))
    except (KeyError, ValueError, TypeError) as e:
        raise WorkspaceError(f"{path}: {e}") from None


def load_shots(path: Path) -> list[tuple[int, int]]:
    with open(path) as f:
        data = json.load(f)
    if not isinstance(data, list):
        raise WorkspaceError(f"{path}: expected a list of shot spans")
    shots = []
    for i, rec in enumerate(data):
        try:
            shots.append((int(rec["start_frame"]), int(rec["end_frame"])))
        except (KeyError, TypeError) as e:
            raise WorkspaceError(f"{path}: shot {i}: missing field {e}") from None
    for (s, e) in shots:
        if s > e:
            raise WorkspaceError(f"{path}: shot {s}..{e} has start after end")
    for (_, e1), (s2, _) in zip(shots, shots[1:]):
        if s2 <= e1:
            raise WorkspaceError(f"{path}: shots not sorted/disjoint near frame {s2}")
    return shots


def load_segments(path: Path) -> list[Segment]:
    with open(path) as f:
        data = json.load(f)
    if not isinstance(data, list):
        raise WorkspaceError(f"{path}: expected a list of segments")
    segments = []
    for i, rec in enumerate(data):
        try:
            segments.append(
                Segment(
                    start_frame=int(rec["start_frame"]),
                    end_frame=int(rec["end_frame"]),
                    movement=Movement(rec["movement"]),
                    dancer_id=str(rec["dancer_id"]),
                    sequence_id=str(rec["sequence_id"]),
                    battle_order=int(rec["battle_order"]),
                    override=bool(rec.get("override", False)),
                )
            )
        except (KeyError, TypeError, ValueError) as e:
            raise WorkspaceError(f"{path}: segment {i}: {e}") from None
    # override spans mark wrong-dancer stretches inside element segments, so
    # only the element segments themselves must be disjoint per sequence
    by_sequence: dict[str, list[Segment]] = {}
    for seg in segments:
        if not seg.override:
            by_sequence.setdefault(seg.sequence_id, []).append(seg)
    for seq_id, segs in by_sequence.items():
        segs = sorted(segs, key=lambda s: s.start_frame)
        for s1, s2 in zip(segs, segs[1:]):
            if s2.start_frame <= s1.end_frame:
                raise WorkspaceError(
                    f"{path}: segments {s1.start_frame}..{s1.end_frame} and "
                    f"{s2.start_frame}..{s2.end_frame} overlap in sequence {seq_id}"
                )
    return segments


def load_beats(path: Path) -> BeatTrack:
    if not path.exists():
        log.warning("%s: no music beats file; beat metrics will be skipped", path)
        return BeatTrack()
    with open(path) as f:
        data = json.load(f)
    try:
        return BeatTrack(np.asarray(data["times"], dtype=float))
    except (KeyError, TypeError, ValueError) as e:
        raise WorkspaceError(f"{path}: {e}") from None


def load_manual_annotations(video_dir: Path) -> dict[int, np.ndarray]:
    """Read manual/<frame>.json files into frame -> (17, 2) coordinates."""
    out: dict[int, np.ndarray] = {}
    manual_dir = video_dir / "manual"
    if not manual_dir.is_dir():
        return out
    for path in sorted(manual_dir.glob("*.json")):
        with open(path) as f:
            rec = json.load(f)
        try:
            frame = int(rec["frame"])
            pose = np.asarray(rec["keypoints"], dtype=float)
        except (KeyError, TypeError, ValueError) as e:
            raise WorkspaceError(f"{path}: {e}") from None
        if pose.shape != (NUM_JOINTS, 2) or not np.isfinite(pose).all():
            raise WorkspaceError(f"{path}: keypoints must be finite ({NUM_JOINTS}, 2)")
        out[frame] = pose
    return out


def save_manual_annotation(video_dir: Path, video_id: str, frame: int, pose: np.ndarray) -> None:
    write_json(
        video_dir / "manual" / f"{frame:06d}.json",
        {
            "video_id": video_id,
            "frame": frame,
            "keypoints": [[_round_coord(x), _round_coord(y)] for x, y in pose],
        },
    )


def load_side_files(video_dir: Path, video_id: str):
    """Shot cuts, segments, music beats, and manual annotations for a video."""
    shots = load_shots(video_dir / "shots.json")
    segments = load_segments(video_dir / "segments.json")
    beats = load_beats(video_dir / "beats.json")
    manual = load_manual_annotations(video_dir)
    return shots, segments, beats, manual


# --- manifest -----------------------------------------------------------------


def manifest_entry_to_record(e: LabelManifestEntry) -> dict:
    rec = {
        "video_id": e.video_id,
        "frame": e.frame,
        "reason": e.reason,
        "status": e.status,
    }
    if e.submitted_pose is not None:
        rec["keypoints"] = [[_round_coord(x), _round_coord(y)] for x, y in e.submitted_pose]
    return rec


def load_manifest(path: Path) -> list[LabelManifestEntry]:
    if not path.exists():
        return []
    with open(path) as f:
        data = json.load(f)
    entries = []
    for i, rec in enumerate(data.get("entries", [])):
        try:
            pose = rec.get("keypoints")
            entries.append(
                LabelManifestEntry(
                    video_id=str(rec["video_id"]),
                    frame=int(rec["frame"]),
                    reason=str(rec["reason"]),
                    status=str(rec["status"]),
                    submitted_pose=None if pose is None else np.asarray(pose, dtype=float),
                )
            )
        except (KeyError, TypeError, ValueError) as e:
            raise WorkspaceError(f"{path}: entry {i}: {e}") from None
    return entries


def save_manifest(path: Path, entries: list[LabelManifestEntry]) -> None:
    ordered = sorted(entries, key=lambda e: (e.video_id, e.frame))
    write_json(path, {"entries": [manifest_entry_to_record(e) for e in ordered]})


# --- output sequences ----------------------------------------------------------


def sequence_to_document(
    seq: KeypointSequence, video_id: str, segment_id: str, fps: float
) -> dict:
    frames = []
    for i, frame in enumerate(seq.frames):
        coords = seq.coords[i]
        missing = seq.provenance[i] is Provenance.MISSING
        score = seq.labelling_score[i]
        frames.append(
            {
                "frame": int(frame),
                "keypoints": None
                if missing
                else [[_round_coord(x), _round_coord(y)] for x, y in coords],
                "provenance": seq.provenance[i].value,
                "labelling_score": None if not np.isfinite(score) else _round_score(score),
            }
        )
    return {"video_id": video_id, "segment_id": segment_id, "fps": fps, "frames": frames}


def sequence_from_document(doc: dict, where: str) -> tuple[KeypointSequence, str, str, float]:
    try:
        records = doc["frames"]
        frames = [int(r["frame"]) for r in records]
        provenance = [Provenance(r["provenance"]) for r in records]
        coords = np.full((len(records), NUM_JOINTS, 2), np.nan)
        scores = np.full(len(records), np.nan)
        for i, r in enumerate(records):
            if r["keypoints"] is not None:
                coords[i] = np.asarray(r["keypoints"], dtype=float)
            if r.get("labelling_score") is not None:
                scores[i] = float(r["labelling_score"])
        seq = KeypointSequence(frames, coords, provenance, scores)
        return seq, str(doc["video_id"]), str(doc["segment_id"]), float(doc["fps"])
    except (KeyError, TypeError, ValueError) as e:
        raise WorkspaceError(f"{where}: {e}") from None


def load_sequence(path: Path) -> tuple[KeypointSequence, str, str, float]:
    with open(path) as f:
        return sequence_from_document(json.load(f), str(path))


# --- workspace ------------------------------------------------------------------


@dataclass
class VideoWorkspace:
    root: Path
    video_id: str

    @property
    def dir(self) -> Path:
        return self.root / self.video_id

    @property
    def out_dir(self) -> Path:
        return self.dir / "out"

    @property
    def manifest_path(self) -> Path:
        return self.dir / "manifest.json"

    @property
    def lock_path(self) -> Path:
        return self.dir / "manifest.lock"

    def stage_path(self, stage: str) -> Path:
        return {
            "filter": self.out_dir / "filter.jsonl",
            "track": self.out_dir / "track.json",
            "select": self.out_dir / "select.json",
            "refine": self.out_dir / "sequences",
            "metrics": self.out_dir / "metrics.json",
            "stats": self.out_dir / "stats.json",
        }[stage]

    def locked_by(self) -> Optional[int]:
        """PID of a live annotation service holding this video's manifest."""
        try:
            pid = int(self.lock_path.read_text().strip())
        except (OSError, ValueError):
            return None
        try:
            os.kill(pid, 0)
        except ProcessLookupError:
            return None
        except PermissionError:
            pass
        return pid


def list_videos(root: Path) -> list[str]:
    root = Path(root)
    if not root.is_dir():
        raise WorkspaceError(f"workspace root {root} is not a directory")
    videos = sorted(
        p.name for p in root.iterdir() if p.is_dir() and (p / "detections.jsonl").exists()
    )
    if not videos:
        raise WorkspaceError(f"no videos with detections.jsonl under {root}")
    return videos
