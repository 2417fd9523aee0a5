"""Per-stage association costs built from IOU, appearance and motion distances.

All costs live in [0, 1]; a cost of 1 marks a forbidden pairing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import boxes_to_array, iou_matrix
from .motion import motion_distance_matrix


@dataclass(frozen=True)
class AssociationThresholds:
    theta_iou: float = 0.9
    theta_app: float = 0.2
    theta_motion: float = 0.2
    match_cost_max: float = 0.999

    def __post_init__(self):
        for name in ("theta_iou", "theta_app", "theta_motion", "match_cost_max"):
            v = getattr(self, name)
            if not (0.0 < v <= 1.0):
                raise ValueError(f"{name}={v} must lie in (0, 1]")


def appearance_distance(track_emb: Optional[np.ndarray], det_emb: Optional[np.ndarray],
                        theta_app: float) -> float:
    """Halved cosine distance, gated to 1 above ``theta_app``."""
    if track_emb is None or det_emb is None:
        return 1.0
    d = (1.0 - float(np.dot(track_emb, det_emb))) / 2.0
    d = min(1.0, max(0.0, d))
    return d if d <= theta_app else 1.0


def stage1_cost(d_iou: float, d_app: float) -> float:
    return min(d_iou, d_app)


def stage2_cost(d_app: float) -> float:
    return d_app


def stage3_cost(d_iou: float, d_app: float, d_motion_gated: Optional[float], theta_iou: float) -> float:
    """IOU-gated max of appearance and gated motion distance.

    ``d_motion_gated=None`` drops the motion term (tracking without events).
    """
    if d_iou > theta_iou:
        return 1.0
    if d_motion_gated is None:
        return d_app
    return max(d_app, d_motion_gated)


def iou_distance_matrix(track_boxes, det_boxes) -> np.ndarray:
    return 1.0 - iou_matrix(boxes_to_array(track_boxes), boxes_to_array(det_boxes))


def appearance_distance_matrix(track_emb: Sequence[Optional[np.ndarray]],
                               det_emb: Sequence[Optional[np.ndarray]],
                               theta_app: float) -> np.ndarray:
    out = np.ones((len(track_emb), len(det_emb)), dtype=float)
    ti = [i for i, e in enumerate(track_emb) if e is not None]
    dj = [j for j, e in enumerate(det_emb) if e is not None]
    if not ti or not dj:
        return out
    A = np.array([track_emb[i] for i in ti])
    B = np.array([det_emb[j] for j in dj])
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"appearance dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    d = np.clip((1.0 - A @ B.T) / 2.0, 0.0, 1.0)
    out[np.ix_(ti, dj)] = np.where(d <= theta_app, d, 1.0)
    return out


def gate_motion_matrix(d_motion: np.ndarray, theta_motion: float) -> np.ndarray:
    return np.where(d_motion <= theta_motion, d_motion, 1.0)


def combine_costs(stage: int, thresholds: AssociationThresholds, *,
                  d_iou: Optional[np.ndarray] = None,
                  d_app: Optional[np.ndarray] = None,
                  d_motion: Optional[np.ndarray] = None) -> np.ndarray:
    """Elementwise stage cost from precomputed distance matrices.

    ``d_app`` must already be gated; ``d_motion`` is the raw motion distance
    and is gated here. For stage 3, ``d_motion=None`` drops the motion term.
    """
    if stage == 1:
        if d_iou is None or d_app is None:
            raise ValueError("stage 1 needs d_iou and d_app")
        _check_shapes(d_iou, d_app)
        return np.minimum(d_iou, d_app)
    if stage == 2:
        if d_app is None:
            raise ValueError("stage 2 needs d_app")
        return np.array(d_app, dtype=float, copy=True)
    if stage == 3:
        if d_iou is None or d_app is None:
            raise ValueError("stage 3 needs d_iou and d_app")
        _check_shapes(d_iou, d_app, d_motion)
        cost = np.array(d_app, dtype=float, copy=True)
        if d_motion is not None:
            cost = np.maximum(cost, gate_motion_matrix(d_motion, thresholds.theta_motion))
        cost[d_iou > thresholds.theta_iou] = 1.0
        return cost
    raise ValueError(f"unknown stage {stage!r}")


def _check_shapes(*mats):
    shapes = {np.shape(m) for m in mats if m is not None}
    if len(shapes) > 1:
        raise ValueError(f"distance matrices disagree in shape: {sorted(shapes)}")


def build_cost_matrix(tracks, detections, stage: int, thresholds: AssociationThresholds, *,
                      det_motion=None, use_motion: bool = False) -> np.ndarray:
    """Cost matrix (tracks x detections) for one cascade stage.

    ``tracks`` are :class:`~uavmot.core.Track` objects whose predicted state
    supplies the IOU box. ``det_motion`` holds one motion embedding (or None)
    per detection and is only consulted in stage 3 when ``use_motion`` is set.
    """
    n, m = len(tracks), len(detections)
    if n == 0 or m == 0:
        return np.ones((n, m), dtype=float)
    if use_motion and det_motion is not None and len(det_motion) != m:
        raise ValueError(f"{len(det_motion)} motion embeddings for {m} detections")
    d_app = appearance_distance_matrix([t.appearance for t in tracks],
                                       [d.appearance for d in detections], thresholds.theta_app)
    if stage == 2:
        return combine_costs(2, thresholds, d_app=d_app)
    d_iou = iou_distance_matrix([t.state.to_bbox() for t in tracks], [d.bbox for d in detections])
    if stage == 1:
        return combine_costs(1, thresholds, d_iou=d_iou, d_app=d_app)
    d_motion = None
    if use_motion:
        if det_motion is None:
            det_motion = [None] * m
        d_motion = motion_distance_matrix([t.motion for t in tracks], det_motion)
    return combine_costs(stage, thresholds, d_iou=d_iou, d_app=d_app, d_motion=d_motion)
