"""Domain types and box geometry shared across the tracker, metrics and simulator."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

DEFAULT_EMBEDDING_DIM = 128


class Modality(enum.Enum):
    RGB = "rgb"
    IR = "ir"


class TrackStatus(enum.Enum):
    TENTATIVE = "tentative"
    CONFIRMED = "confirmed"
    LOST = "lost"
    REMOVED = "removed"


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box as (left, top, width, height) in pixels."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        vals = (self.x, self.y, self.w, self.h)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite box coordinates: {vals}")
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"box must have positive width and height, got w={self.w}, h={self.h}")

    @property
    def center(self) -> tuple[float, float]:
        return self.x + self.w / 2.0, self.y + self.h / 2.0

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    @property
    def area(self) -> float:
        return self.w * self.h

    def to_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.w, self.h], dtype=float)

    @classmethod
    def from_center(cls, cx: float, cy: float, w: float, h: float) -> "BBox":
        return cls(cx - w / 2.0, cy - h / 2.0, w, h)


def normalize_embedding(vec, dim: Optional[int] = None) -> np.ndarray:
    """Return a float copy of ``vec`` scaled to unit L2 norm.

    Raises ``ValueError`` on zero/non-finite vectors or a dimension mismatch.
    """
    arr = np.asarray(vec, dtype=float).ravel()
    if dim is not None and arr.shape[0] != dim:
        raise ValueError(f"embedding dimension {arr.shape[0]} != expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("embedding contains non-finite values")
    norm = float(np.linalg.norm(arr))
    if norm == 0.0:
        raise ValueError("cannot normalize a zero embedding")
    return arr / norm


@dataclass(frozen=True, eq=False)
class Detection:
    """A single per-frame observation.

    ``appearance`` is normalized at construction, so downstream code can rely
    on unit vectors.
    """

    frame: int
    bbox: BBox
    confidence: float
    appearance: Optional[np.ndarray] = None
    modality: Modality = Modality.RGB

    def __post_init__(self):
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")
        if self.appearance is not None:
            object.__setattr__(self, "appearance", normalize_embedding(self.appearance))


@dataclass(frozen=True)
class MotionEmbedding:
    """Seven event statistics of a target crop, in fixed order.

    Count of non-background pixels, then normalized x mean / std, y mean / std,
    and normalized x / y extent.
    """

    n_nonbg: float = 0.0
    mu_x: float = 0.0
    sigma_x: float = 0.0
    mu_y: float = 0.0
    sigma_y: float = 0.0
    range_x: float = 0.0
    range_y: float = 0.0

    def __post_init__(self):
        vals = (self.n_nonbg, self.mu_x, self.sigma_x, self.mu_y, self.sigma_y, self.range_x, self.range_y)
        if not all(math.isfinite(v) for v in vals) or self.n_nonbg < 0:
            raise ValueError("motion embedding components must be finite with n_nonbg >= 0")
        if self.n_nonbg == 0 and any(v != 0 for v in vals[1:]):
            raise ValueError("an empty motion embedding must be all zeros")
        if self.range_x < 0 or self.range_y < 0:
            raise ValueError("ranges must be >= 0")
        if self.sigma_x > self.range_x / 2 + 1e-9 or self.sigma_y > self.range_y / 2 + 1e-9:
            raise ValueError("std exceeds half the range")

    def to_array(self) -> np.ndarray:
        return np.array(
            [self.n_nonbg, self.mu_x, self.sigma_x, self.mu_y, self.sigma_y, self.range_x, self.range_y],
            dtype=float,
        )

    @classmethod
    def from_array(cls, values) -> "MotionEmbedding":
        vals = [float(v) for v in np.asarray(values, dtype=float).ravel()]
        if len(vals) != 7:
            raise ValueError(f"motion embedding needs 7 components, got {len(vals)}")
        return cls(*vals)

    @property
    def is_empty(self) -> bool:
        return self.n_nonbg == 0


@dataclass(frozen=True, eq=False)
class EventFrame:
    """Signed event-accumulation grid of ``height`` x ``width`` pixels.

    Stored sparsely (the non-zero pixels); ``values`` materializes the dense
    row-major grid on first access.
    """

    width: int
    height: int
    xs: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    ys: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    vs: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"event frame must be non-empty, got {self.width}x{self.height}")
        xs = np.asarray(self.xs, dtype=np.int64).ravel()
        ys = np.asarray(self.ys, dtype=np.int64).ravel()
        vs = np.asarray(self.vs, dtype=np.int64).ravel()
        if not (xs.shape == ys.shape == vs.shape):
            raise ValueError("xs, ys and vs must have equal length")
        if xs.size:
            if xs.min() < 0 or xs.max() >= self.width or ys.min() < 0 or ys.max() >= self.height:
                raise ValueError("event pixel coordinates out of range")
            keep = vs != 0
            xs, ys, vs = xs[keep], ys[keep], vs[keep]
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "vs", vs)

    @classmethod
    def from_dense(cls, values) -> "EventFrame":
        grid = np.asarray(values)
        if grid.ndim != 2:
            raise ValueError("dense event grid must be 2-D (height, width)")
        if not np.issubdtype(grid.dtype, np.integer):
            if not np.all(grid == np.round(grid)):
                raise ValueError("event values must be integers")
            grid = grid.astype(np.int64)
        ys, xs = np.nonzero(grid)
        frame = cls(grid.shape[1], grid.shape[0], xs, ys, grid[ys, xs])
        object.__setattr__(frame, "_dense", grid.astype(np.int64, copy=True))
        return frame

    @property
    def values(self) -> np.ndarray:
        dense = self.__dict__.get("_dense")
        if dense is None:
            dense = np.zeros((self.height, self.width), dtype=np.int64)
            np.add.at(dense, (self.ys, self.xs), self.vs)
            object.__setattr__(self, "_dense", dense)
        return dense

    @property
    def n_events(self) -> int:
        return int(self.xs.size)


@dataclass
class Track:
    """Identity-bearing trajectory owned and mutated by the tracker."""

    id: int
    state: "KalmanState"  # noqa: F821 - defined in uavmot.kalman
    status: TrackStatus = TrackStatus.TENTATIVE
    appearance: Optional[np.ndarray] = None
    motion: Optional[MotionEmbedding] = None
    age: int = 0
    time_since_update: int = 0
    hits: int = 1
    last_box: Optional[BBox] = None
    confidence: float = 0.0


def iou(a: BBox, b: BBox) -> float:
    if a == b:
        return 1.0
    iw = min(a.x2, b.x2) - max(a.x, b.x)
    ih = min(a.y2, b.y2) - max(a.y, b.y)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    return min(1.0, inter / (a.area + b.area - inter))


def center_distance(a: BBox, b: BBox) -> float:
    ax, ay = a.center
    bx, by = b.center
    return math.hypot(ax - bx, ay - by)


def boxes_to_array(boxes) -> np.ndarray:
    if len(boxes) == 0:
        return np.zeros((0, 4), dtype=float)
    return np.array([(b.x, b.y, b.w, b.h) for b in boxes], dtype=float)


def iou_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise IOU of two (N, 4) / (M, 4) arrays of (x, y, w, h) boxes."""
    a = np.asarray(a, dtype=float).reshape(-1, 4)
    b = np.asarray(b, dtype=float).reshape(-1, 4)
    if a.shape[0] == 0 or b.shape[0] == 0:
        return np.zeros((a.shape[0], b.shape[0]), dtype=float)
    ax1, ay1, aw, ah = a[:, 0:1], a[:, 1:2], a[:, 2:3], a[:, 3:4]
    bx1, by1, bw, bh = b[:, 0], b[:, 1], b[:, 2], b[:, 3]
    iw = np.minimum(ax1 + aw, bx1 + bw) - np.maximum(ax1, bx1)
    ih = np.minimum(ay1 + ah, by1 + bh) - np.maximum(ay1, by1)
    inter = np.maximum(iw, 0.0) * np.maximum(ih, 0.0)
    union = aw * ah + bw * bh - inter
    out = np.where(inter > 0.0, np.minimum(1.0, inter / np.where(union > 0, union, 1.0)), 0.0)
    # identical boxes score exactly 1 whatever the rounding of the corner sums
    out[(ax1 == bx1) & (ay1 == by1) & (aw == bw) & (ah == bh)] = 1.0
    return out
