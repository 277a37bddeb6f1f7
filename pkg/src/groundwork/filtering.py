"""Per-frame reduction of the multi-model detection soup: confidence
rejection, top-k-by-area per model, then cross-model NMS."""

from __future__ import annotations

from dataclasses import dataclass, field

from groundwork.model import PoseCandidate, iou


@dataclass(frozen=True)
class FrameDetections:
    """All candidates for one frame, across every detector/estimator pair."""

    frame: int
    candidates: tuple[PoseCandidate, ...]

    def __post_init__(self):
        object.__setattr__(self, "candidates", tuple(self.candidates))
        for c in self.candidates:
            if c.frame != self.frame:
                raise ValueError(f"candidate frame {c.frame} != detections frame {self.frame}")


@dataclass(frozen=True)
class FilterConfig:
    min_box_score: float = 0.5
    top_k_per_model: int = 4
    nms_iou: float = 0.7

    def __post_init__(self):
        if not 0.0 <= self.min_box_score <= 1.0:
            raise ValueError(f"min_box_score must be in [0, 1]: {self.min_box_score}")
        if self.top_k_per_model < 1:
            raise ValueError(f"top_k_per_model must be positive: {self.top_k_per_model}")
        if not 0.0 <= self.nms_iou <= 1.0:
            raise ValueError(f"nms_iou must be in [0, 1]: {self.nms_iou}")


def reject_low_confidence(frame: FrameDetections, cfg: FilterConfig) -> FrameDetections:
    """Keep candidates with box_score >= min_box_score, order preserved."""
    kept = tuple(c for c in frame.candidates if c.box_score >= cfg.min_box_score)
    return FrameDetections(frame.frame, kept)


def keep_largest_per_model(frame: FrameDetections, cfg: FilterConfig) -> FrameDetections:
    """Per model, keep the top_k_per_model candidates by box area.

    Ties break by higher box_score, then original order. Output preserves
    the input ordering of the survivors.
    """
    ranked: dict[str, list[tuple[float, float, int]]] = {}
    for i, c in enumerate(frame.candidates):
        ranked.setdefault(c.model_id, []).append((-c.box.area, -c.box_score, i))
    keep: set[int] = set()
    for entries in ranked.values():
        entries.sort()
        keep.update(i for (_, _, i) in entries[: cfg.top_k_per_model])
    kept = tuple(c for i, c in enumerate(frame.candidates) if i in keep)
    return FrameDetections(frame.frame, kept)


def nms(candidates: list[PoseCandidate], cfg: FilterConfig) -> list[PoseCandidate]:
    """Greedy score-ordered NMS over box overlap.

    Repeatedly keeps the highest-scoring remaining candidate and suppresses
    everything overlapping it with iou > nms_iou. Ties break by larger area,
    then input order.
    """
    order = sorted(
        range(len(candidates)),
        key=lambda i: (-candidates[i].box_score, -candidates[i].box.area, i),
    )
    kept: list[int] = []
    suppressed = [False] * len(candidates)
    for i in order:
        if suppressed[i]:
            continue
        kept.append(i)
        for j in order:
            if not suppressed[j] and j != i and iou(candidates[i].box, candidates[j].box) > cfg.nms_iou:
                suppressed[j] = True
    return [candidates[i] for i in sorted(kept)]


def filter_frame(frame: FrameDetections, cfg: FilterConfig) -> FrameDetections:
    """Confidence rejection, then per-model top-k, then cross-model NMS."""
    out = reject_low_confidence(frame, cfg)
    out = keep_largest_per_model(out, cfg)
    return FrameDetections(frame.frame, tuple(nms(list(out.candidates), cfg)))
