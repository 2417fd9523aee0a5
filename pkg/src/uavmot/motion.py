"""Training-free motion embeddings from event frames, and their distances."""

from __future__ import annotations

import math

import numpy as np

from .core import BBox, EventFrame, MotionEmbedding

CROP_MARGIN = 20
_SMALL = 24


def _crop_bounds(bbox: BBox, frame_w: int, frame_h: int, margin: float) -> tuple[int, int, int, int]:
    x0 = max(0, math.floor(bbox.x - margin))
    y0 = max(0, math.floor(bbox.y - margin))
    x1 = min(frame_w, math.ceil(bbox.x2 + margin))
    y1 = min(frame_h, math.ceil(bbox.y2 + margin))
    if x1 <= x0 or y1 <= y0:
        raise ValueError(f"box {bbox} does not overlap the {frame_w}x{frame_h} frame")
    return x0, y0, x1, y1


def crop_expand(bbox: BBox, frame_w: int, frame_h: int, margin: float = CROP_MARGIN) -> BBox:
    """Grow ``bbox`` by ``margin`` px on every side, clamped to the frame.

    Fractional edges are widened to whole pixels so the crop maps onto the
    event grid.
    """
    x0, y0, x1, y1 = _crop_bounds(bbox, frame_w, frame_h, margin)
    return BBox(float(x0), float(y0), float(x1 - x0), float(y1 - y0))


def embedding_from_points(xs, ys, crop_w: float, crop_h: float) -> MotionEmbedding:
    """Statistics of crop-local pixel coordinates, normalized by crop size."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if crop_w <= 0 or crop_h <= 0:
        raise ValueError("degenerate crop")
    n = xs.size
    if n == 0:
        return MotionEmbedding()
    if n <= _SMALL:
        # plain floats beat numpy call overhead on the few pixels of a tiny target
        lx, ly = xs.tolist(), ys.tolist()
        mx, my = sum(lx) / n, sum(ly) / n
        vx = sum((v - mx) ** 2 for v in lx) / n
        vy = sum((v - my) ** 2 for v in ly) / n
        rx, ry = max(lx) - min(lx), max(ly) - min(ly)
    else:
        mx, my = float(xs.sum()) / n, float(ys.sum()) / n
        dx, dy = xs - mx, ys - my
        vx, vy = float(dx @ dx) / n, float(dy @ dy) / n
        rx, ry = float(xs.max() - xs.min()), float(ys.max() - ys.min())
    return MotionEmbedding(
        n_nonbg=float(n),
        mu_x=mx / crop_w,
        sigma_x=math.sqrt(vx) / crop_w,
        mu_y=my / crop_h,
        sigma_y=math.sqrt(vy) / crop_h,
        range_x=rx / crop_w,
        range_y=ry / crop_h,
    )


def motion_embedding(frame: EventFrame, bbox: BBox, margin: float = CROP_MARGIN) -> MotionEmbedding:
    """7-dim motion embedding of the non-zero event pixels in the expanded crop."""
    x0, y0, x1, y1 = _crop_bounds(bbox, frame.width, frame.height, margin)
    xs, ys = frame.xs, frame.ys
    inside = (xs >= x0) & (xs < x1) & (ys >= y0) & (ys < y1)
    return embedding_from_points(xs[inside] - x0, ys[inside] - y0, x1 - x0, y1 - y0)


def _vec(e) -> np.ndarray:
    if isinstance(e, MotionEmbedding):
        return e.to_array()
    v = np.asarray(e, dtype=float).ravel()
    if v.size != 7:
        raise ValueError(f"motion embedding needs 7 components, got {v.size}")
    return v


def motion_distance(a, b) -> float:
    """Cosine distance of two embeddings (or raw 7-vectors); 1 if either is all-zero."""
    va, vb = _vec(a), _vec(b)
    na, nb = float(np.linalg.norm(va)), float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        return 1.0
    d = 1.0 - float(va @ vb) / (na * nb)
    return min(1.0, max(0.0, d))


def gated_motion_distance(d_m: float, theta_motion: float) -> float:
    return d_m if d_m <= theta_motion else 1.0


def motion_distance_matrix(track_emb, det_emb) -> np.ndarray:
    """Pairwise motion distances; ``None`` entries give distance 1."""
    out = np.ones((len(track_emb), len(det_emb)), dtype=float)
    if out.size == 0:
        return out
    ti = [i for i, e in enumerate(track_emb) if e is not None]
    dj = [j for j, e in enumerate(det_emb) if e is not None]
    if not ti or not dj:
        return out
    A = np.array([track_emb[i].to_array() for i in ti])
    B = np.array([det_emb[j].to_array() for j in dj])
    na = np.linalg.norm(A, axis=1)
    nb = np.linalg.norm(B, axis=1)
    denom = na[:, None] * nb[None, :]
    with np.errstate(invalid="ignore", divide="ignore"):
        d = 1.0 - (A @ B.T) / denom
    d = np.where(denom > 0, np.clip(d, 0.0, 1.0), 1.0)
    out[np.ix_(ti, dj)] = d
    return out
