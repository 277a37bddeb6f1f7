import numpy as np
import pytest

from groundwork.filtering import FrameDetections
from groundwork.model import NUM_JOINTS, BBox, Pose, PoseCandidate


def grid_pose(box: BBox, scores=None) -> Pose:
    """17 joints laid out inside the box (corners pinned to the box)."""
    xs = np.linspace(box.x, box.x + box.w, NUM_JOINTS)
    ys = np.linspace(box.y, box.y + box.h, NUM_JOINTS)
    return Pose.from_array(np.column_stack([xs, ys]), scores)


def make_candidate(
    frame: int,
    x: float = 0.0,
    y: float = 0.0,
    w: float = 10.0,
    h: float = 10.0,
    box_score: float = 0.9,
    model_id: str = "m0",
    kp_score: float = 0.9,
) -> PoseCandidate:
    box = BBox(x, y, w, h)
    return PoseCandidate(frame, box, box_score, grid_pose(box, np.full(NUM_JOINTS, kp_score)), model_id)


def frame_of(frame: int, *candidates: PoseCandidate) -> FrameDetections:
    return FrameDetections(frame, tuple(candidates))


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
