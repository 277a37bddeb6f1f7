"""Build the bundled synthetic workspace and its golden outputs.

Run from the repo root:  python tests/fixtures/generate.py

Deliberately does NOT import the package: the expected final sequences are
derived analytically. Joint trajectories are piecewise-linear on a
1/16-pixel lattice (exact in binary floating point and at 4-decimal
rounding), so windowed least-squares curve fits must reproduce them
exactly and the final files can be written directly from the line
equations.
"""

import json
from pathlib import Path

import numpy as np

HERE = Path(__file__).parent
VIDEO = "fixture01"
FPS = 25.0
N_JOINTS = 17

# segment/shot layout: shots [0..59][60..119]; segments seq1 0..99, seq2 100..119
REGION_STARTS = [0, 60, 100]
REGION_ENDS = [59, 99, 119]
SEGMENTS = [
    {"sequence_id": "seq1", "start_frame": 0, "end_frame": 99, "movement": "toprock",
     "battle_order": 1},
    {"sequence_id": "seq2", "start_frame": 100, "end_frame": 119, "movement": "footwork",
     "battle_order": 2},
]

# frames whose dancer detection is junk (filtered away) or confidently wrong
LOW_BOX_FRAMES = {10, 25, 33, 70, 85, 90, 93, 96, 108}
LOW_KP_FRAMES = {11, 34, 50, 51, 52, 71, 91, 94, 97, 112}
MISSING = sorted(LOW_BOX_FRAMES | LOW_KP_FRAMES)
# frames the labelling discount forces to manual annotation (derived by hand
# from the pattern above: third consecutive miss at 52, window density at 97)
MANUAL_FRAMES = [52, 97]

GOOD_BOX, GOOD_KP = 0.9, 0.9
LOWKP_BOX, LOWKP_KP = 0.8, 0.4
LOWBOX_BOX = 0.3


def snap(a):
    return np.round(np.asarray(a, dtype=float) * 16.0) / 16.0


def build_lines():
    """Per-region slopes/intercepts, continuous at region boundaries."""
    rng = np.random.default_rng(7)
    base = np.column_stack([snap(rng.uniform(450, 850, N_JOINTS)), snap(rng.uniform(250, 750, N_JOINTS))])
    slopes = [snap(rng.uniform(-1, 1, (N_JOINTS, 2))) for _ in REGION_STARTS]
    intercepts = [base]
    for r in range(1, len(REGION_STARTS)):
        boundary = REGION_STARTS[r]
        prev_value = intercepts[r - 1] + slopes[r - 1] * (boundary - REGION_STARTS[r - 1])
        intercepts.append(prev_value)
    return slopes, intercepts


SLOPES, INTERCEPTS = build_lines()


def region_of(frame):
    for r in range(len(REGION_STARTS) - 1, -1, -1):
        if frame >= REGION_STARTS[r]:
            return r
    raise AssertionError(frame)


def dancer_pose(frame):
    r = region_of(frame)
    return INTERCEPTS[r] + SLOPES[r] * (frame - REGION_STARTS[r])


def dancer_box(frame, dx=0.0):
    pose = dancer_pose(frame)
    x0, y0 = pose.min(axis=0) - 10.0
    x1, y1 = pose.max(axis=0) + 10.0
    return [x0 + dx, y0, (x1 - x0) + 4.0 * (frame % 2), y1 - y0]


def rc(v):
    return round(float(v), 4)


def rs(v):
    return round(float(v), 6)


def det_record(frame, model_id, box, box_score, pose, kp_score):
    return {
        "frame": frame,
        "model_id": model_id,
        "box": [rc(v) for v in box],
        "box_score": rs(box_score),
        "keypoints": [[rc(x), rc(y), rs(kp_score)] for x, y in pose],
    }


def audience_pose():
    xs = snap(np.linspace(1400, 1480, N_JOINTS))
    ys = snap(np.linspace(800, 860, N_JOINTS))
    return np.column_stack([xs, ys])


def main():
    video_dir = HERE / "workspace" / VIDEO
    (video_dir / "manual").mkdir(parents=True, exist_ok=True)
    golden_dir = HERE / "golden"
    golden_dir.mkdir(parents=True, exist_ok=True)

    lines = []
    crowd = audience_pose()
    for frame in range(120):
        if frame in LOW_BOX_FRAMES:
            box_score, kp_score = LOWBOX_BOX, GOOD_KP
        elif frame in LOW_KP_FRAMES:
            box_score, kp_score = LOWKP_BOX, LOWKP_KP
        else:
            box_score, kp_score = GOOD_BOX, GOOD_KP
        pose = dancer_pose(frame)
        lines.append(det_record(frame, "m0", dancer_box(frame), box_score, pose, kp_score))
        # near-duplicate from a second model, always ranked below m0, and a
        # low-confidence junk box from a third
        lines.append(
            det_record(frame, "m1", dancer_box(frame, dx=0.5), box_score - 0.05,
                       pose + [0.5, 0.0], kp_score)
        )
        lines.append(det_record(frame, "m2", [10, 10, 40, 40],
                                0.2, np.tile([30.0, 30.0], (N_JOINTS, 1)), 0.5))
        lines.append(det_record(frame, "m0", [1390, 790, 100, 80], 0.95, crowd, 0.4))

    with open(video_dir / "detections.jsonl", "w") as f:
        for rec in lines:
            f.write(json.dumps(rec, sort_keys=True) + "\n")

    dump = lambda path, obj: path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")
    dump(video_dir / "meta.json", {"fps": 25, "frame_width": 1920, "frame_height": 1080})
    dump(video_dir / "shots.json", [
        {"start_frame": 0, "end_frame": 59},
        {"start_frame": 60, "end_frame": 119},
    ])
    dump(video_dir / "segments.json", [
        {**seg, "dancer_id": "d1", "override": False} for seg in SEGMENTS
    ])
    dump(video_dir / "beats.json", {"times": [round(0.48 * k, 6) for k in range(1, 10)]})

    for frame in MANUAL_FRAMES:
        pose = dancer_pose(frame)
        dump(video_dir / "manual" / f"{frame:06d}.json", {
            "video_id": VIDEO,
            "frame": frame,
            "keypoints": [[rc(x), rc(y)] for x, y in pose],
        })

    # golden final sequences: curve values equal the line values everywhere
    good_score = rs(GOOD_BOX * float(np.mean(np.full(N_JOINTS, GOOD_KP))))
    for seg in SEGMENTS:
        seg_id = f"{seg['sequence_id']}_{seg['start_frame']:06d}"
        frames = []
        for frame in range(seg["start_frame"], seg["end_frame"] + 1):
            pose = dancer_pose(frame)
            if frame in MANUAL_FRAMES:
                provenance, score = "manual", 1.0
            elif frame in LOW_BOX_FRAMES or frame in LOW_KP_FRAMES:
                provenance, score = "interpolated", None
            else:
                provenance, score = "interpolated", good_score
            frames.append({
                "frame": frame,
                "keypoints": [[rc(x), rc(y)] for x, y in pose],
                "provenance": provenance,
                "labelling_score": score,
            })
        dump(golden_dir / f"{seg_id}.json", {
            "video_id": VIDEO,
            "segment_id": seg_id,
            "fps": FPS,
            "frames": frames,
        })
    print(f"wrote {video_dir} and {golden_dir}")


if __name__ == "__main__":
    main()
