"""Core geometric types shared by the whole pipeline: boxes, keypoints,
poses, IOU and tightest-box normalization."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

NUM_JOINTS = 17

# COCO keypoint order; every file format and the annotation UI share it.
COCO_JOINT_NAMES = [
    "nose",
    "left_eye",
    "right_eye",
    "left_ear",
    "right_ear",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
    "left_hip",
    "right_hip",
    "left_knee",
    "right_knee",
    "left_ankle",
    "right_ankle",
]

COCO_SKELETON_EDGES = [
    (0, 1), (0, 2), (1, 3), (2, 4),
    (0, 5), (0, 6), (5, 6),
    (5, 7), (7, 9), (6, 8), (8, 10),
    (5, 11), (6, 12), (11, 12),
    (11, 13), (13, 15), (12, 14), (14, 16),
]

# Zero-extent boxes (all joints coincident/collinear) are inflated to this
# width/height so normalization never divides by zero.
DEGENERATE_EXTENT = 1e-6


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box in pixels: top-left corner plus extents."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.w, self.h)):
            raise ValueError(f"box coordinates must be finite: {self}")
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"box extents must be positive: {self}")

    @property
    def area(self) -> float:
        return self.w * self.h


@dataclass(frozen=True)
class Keypoint:
    """One 2D joint location with a confidence score (1.0 for manual points)."""

    x: float
    y: float
    score: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"keypoint coordinates must be finite: {self}")
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"keypoint score must be in [0, 1]: {self.score}")


@dataclass(frozen=True)
class Pose:
    """Exactly 17 keypoints in COCO joint order."""

    joints: tuple[Keypoint, ...]

    def __post_init__(self):
        if len(self.joints) != NUM_JOINTS:
            raise ValueError(f"pose must have {NUM_JOINTS} joints, got {len(self.joints)}")

    @classmethod
    def from_array(cls, xy: np.ndarray, scores=None) -> "Pose":
        """Build from an (17, 2) coordinate array and optional (17,) scores."""
        xy = np.asarray(xy, dtype=float)
        if xy.shape != (NUM_JOINTS, 2):
            raise ValueError(f"expected ({NUM_JOINTS}, 2) coordinates, got {xy.shape}")
        if scores is None:
            scores = np.ones(NUM_JOINTS)
        return cls(tuple(Keypoint(float(x), float(y), float(s)) for (x, y), s in zip(xy, scores)))

    def xy(self) -> np.ndarray:
        """Coordinates as a (17, 2) float array."""
        return np.array([(k.x, k.y) for k in self.joints], dtype=float)

    def scores(self) -> np.ndarray:
        return np.array([k.score for k in self.joints], dtype=float)


@dataclass(frozen=True)
class PoseCandidate:
    """One detected person in one frame, from one detector/estimator pair."""

    frame: int
    box: BBox
    box_score: float
    pose: Pose
    model_id: str

    def __post_init__(self):
        if self.frame < 0:
            raise ValueError(f"frame index must be >= 0: {self.frame}")
        if not 0.0 <= self.box_score <= 1.0:
            raise ValueError(f"box score must be in [0, 1]: {self.box_score}")


@dataclass(frozen=True)
class NormalizedPose:
    """17 joint coordinates in box-relative units.

    Coordinates are nominally in [0, 1]; values outside that range occur only
    when the pose was normalized against a box not derived from it.
    """

    joints: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.joints, dtype=float)
        if arr.shape != (NUM_JOINTS, 2):
            raise ValueError(f"expected ({NUM_JOINTS}, 2) coordinates, got {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("normalized coordinates must be finite")
        object.__setattr__(self, "joints", arr)


def iou(a: BBox, b: BBox) -> float:
    """Intersection-over-union of two boxes; 0 when disjoint.

    Boxes are treated as continuous rectangles (no +1 pixel discretization),
    matching the continuous detector outputs they come from.
    """
    ix = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    iy = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    union = a.area + b.area - inter
    return inter / union


def bounding_box(points: np.ndarray) -> BBox:
    """Tightest axis-aligned box around an (N, 2) coordinate array.

    Non-finite rows are ignored; zero extents are inflated to
    DEGENERATE_EXTENT so the box stays valid.
    """
    pts = np.asarray(points, dtype=float)
    finite = np.isfinite(pts).all(axis=1)
    if not finite.any():
        raise ValueError("cannot compute a bounding box: no finite coordinates")
    pts = pts[finite]
    x0, y0 = pts.min(axis=0)
    x1, y1 = pts.max(axis=0)
    w = max(x1 - x0, DEGENERATE_EXTENT)
    h = max(y1 - y0, DEGENERATE_EXTENT)
    return BBox(float(x0), float(y0), float(w), float(h))


def tightest_box(pose: Pose) -> BBox:
    """Tightest box enclosing all of a pose's keypoints."""
    return bounding_box(pose.xy())


def normalize_points(points: np.ndarray, box: BBox) -> np.ndarray:
    """Map (N, 2) pixel coordinates to box-relative units."""
    pts = np.asarray(points, dtype=float)
    out = np.empty_like(pts)
    out[..., 0] = (pts[..., 0] - box.x) / box.w
    out[..., 1] = (pts[..., 1] - box.y) / box.h
    return out


def normalize_pose(pose: Pose, box: BBox) -> NormalizedPose:
    """Normalize each joint with respect to the given box."""
    return NormalizedPose(normalize_points(pose.xy(), box))
