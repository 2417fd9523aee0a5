"""Forward kernels for cross-modal feature alignment and fusion.

Alignment comes in two flavours: an affine warp driven by a 2x3 matrix built
as a fixed initial matrix plus a predicted offset, and deformable sampling
driven by per-location tap offsets. Fusion weighs each modality per channel
with sigmoid attention and adds a residual of the current modality.

Only the application of already-predicted parameters lives here; nothing is
learned. Coordinates use the align-corners convention: the centres of the
corner pixels map to -1 and +1. Samples falling outside the grid read 0.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np


def _as_grid(values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3:
        raise ValueError(f"feature grid must be (C, H, W), got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("feature grid contains non-finite values")
    return arr


@dataclass(frozen=True, eq=False)
class FeatureGrid:
    values: np.ndarray  # (C, H, W)

    def __post_init__(self):
        object.__setattr__(self, "values", _as_grid(self.values))

    @property
    def channels(self) -> int:
        return self.values.shape[0]

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.values.shape


@dataclass(frozen=True, eq=False)
class AffineMatrix:
    """2x3 matrix ``[[a, b, c], [d, e, f]]`` acting on normalized coordinates."""

    m: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.m, dtype=float)
        if arr.shape != (2, 3):
            raise ValueError(f"affine matrix must be 2x3, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("affine matrix contains non-finite values")
        det = arr[0, 0] * arr[1, 1] - arr[0, 1] * arr[1, 0]
        if abs(det) <= 1e-8:
            warnings.warn(f"affine matrix linear part is near-singular (det={det:.3g})", stacklevel=3)
        object.__setattr__(self, "m", arr)

    @classmethod
    def identity(cls) -> "AffineMatrix":
        return cls(np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]))

    @classmethod
    def zeros(cls) -> "AffineMatrix":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return cls(np.zeros((2, 3)))


def compose_affine(m0: AffineMatrix, delta: AffineMatrix) -> AffineMatrix:
    """Initial matrix plus predicted offset, elementwise."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return AffineMatrix(m0.m + delta.m)


def bilinear_sample(grid: np.ndarray, ys: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Sample a (C, H, W) grid at fractional pixel positions with zero padding.

    ``ys`` and ``xs`` share a shape S; the result has shape (C, *S).
    Neighbours outside the grid contribute 0, so the map is linear in ``grid``.
    """
    C, H, W = grid.shape
    y0 = np.floor(ys).astype(np.int64)
    x0 = np.floor(xs).astype(np.int64)
    wy1 = ys - y0
    wx1 = xs - x0
    wy0 = 1.0 - wy1
    wx0 = 1.0 - wx1
    out = np.zeros((C,) + ys.shape)
    for dy, wy in ((0, wy0), (1, wy1)):
        yi = y0 + dy
        for dx, wx in ((0, wx0), (1, wx1)):
            xi = x0 + dx
            w = wy * wx
            ok = (yi >= 0) & (yi < H) & (xi >= 0) & (xi < W) & (w != 0.0)
            if not ok.any():
                continue
            vals = np.zeros((C,) + ys.shape)
            vals[:, ok] = grid[:, yi[ok], xi[ok]]
            out += vals * w
    return out


def _affine_source_coords(m: np.ndarray, H: int, W: int) -> tuple[np.ndarray, np.ndarray]:
    """Source pixel coordinates for every output pixel under ``m``.

    Written directly in pixel units so the identity (and any exact flip)
    lands exactly on integer pixel positions.
    """
    cx = (W - 1) / 2.0
    cy = (H - 1) / 2.0
    ii, jj = np.meshgrid(np.arange(H, dtype=float), np.arange(W, dtype=float), indexing="ij")
    dx = jj - cx  # = x_norm * cx
    dy = ii - cy  # = y_norm * cy
    (a, b, c), (d, e, f) = m
    x_ratio = cx / cy if cy > 0 else 0.0  # y_norm is 0 when H == 1
    y_ratio = cy / cx if cx > 0 else 0.0
    xs = a * dx + (b * dy * x_ratio if b != 0.0 else 0.0) + c * cx + cx
    ys = (d * dx * y_ratio if d != 0.0 else 0.0) + e * dy + f * cy + cy
    return ys, xs


def affine_warp(grid: FeatureGrid, m: AffineMatrix) -> FeatureGrid:
    """Warp ``grid`` by sampling, for each output location, the point ``m`` maps it to."""
    C, H, W = grid.shape
    ys, xs = _affine_source_coords(m.m, H, W)
    return FeatureGrid(bilinear_sample(grid.values, ys, xs))


def kernel_taps(size: int = 3, dilation: int = 1) -> np.ndarray:
    """Regular ``size`` x ``size`` tap layout as (dy, dx) rows, centred on 0."""
    r = np.arange(size) - (size - 1) / 2.0
    dy, dx = np.meshgrid(r * dilation, r * dilation, indexing="ij")
    return np.stack([dy.ravel(), dx.ravel()], axis=1)


CENTER_TAP = np.zeros((1, 2))


def deformable_sample(grid: FeatureGrid, offsets, taps=CENTER_TAP,
                      weights: Optional[Sequence[float]] = None) -> FeatureGrid:
    """Deformable sampling with per-tap aggregation weights.

    ``taps`` is a (K, 2) array of base (dy, dx) positions; ``offsets`` has
    shape (K, H, W, 2) holding a (dx, dy) pair per tap and output location
    (a (H, W, 2) array is accepted when K == 1). Each output value is
    ``sum_k w_k * bilinear(grid, i + dy_k + oy, j + dx_k + ox)``; weights
    default to ``1/K``.
    """
    C, H, W = grid.shape
    taps = np.asarray(taps, dtype=float).reshape(-1, 2)
    K = taps.shape[0]
    off = np.asarray(offsets, dtype=float)
    if off.ndim == 3 and K == 1:
        off = off[None]
    if off.shape != (K, H, W, 2):
        raise ValueError(f"offsets must have shape {(K, H, W, 2)}, got {off.shape}")
    if not np.all(np.isfinite(off)):
        raise ValueError("offsets contain non-finite values")
    w = np.full(K, 1.0 / K) if weights is None else np.asarray(weights, dtype=float).ravel()
    if w.shape != (K,):
        raise ValueError(f"need {K} tap weights, got {w.shape[0]}")
    ii, jj = np.meshgrid(np.arange(H, dtype=float), np.arange(W, dtype=float), indexing="ij")
    out = np.zeros((C, H, W))
    for k in range(K):
        ys = ii + taps[k, 0] + off[k, ..., 1]
        xs = jj + taps[k, 1] + off[k, ..., 0]
        out += w[k] * bilinear_sample(grid.values, ys, xs)
    return FeatureGrid(out)


@dataclass(frozen=True, eq=False)
class FusionWeights:
    """Per-channel weights for the current modality and the aligned other one."""

    w_self: np.ndarray
    w_other: np.ndarray

    def __post_init__(self):
        ws = np.asarray(self.w_self, dtype=float).ravel()
        wo = np.asarray(self.w_other, dtype=float).ravel()
        if ws.shape != wo.shape:
            raise ValueError("w_self and w_other must have the same length")
        for name, w in (("w_self", ws), ("w_other", wo)):
            if not np.all((w >= 0.0) & (w <= 1.0)):
                raise ValueError(f"{name} components must lie in [0, 1]")
        object.__setattr__(self, "w_self", ws)
        object.__setattr__(self, "w_other", wo)


def adfm_fuse(x_self: FeatureGrid, x_other_aligned: FeatureGrid, w: FusionWeights) -> FeatureGrid:
    """``x_self * w_self + x_other * w_other + x_self``, weights broadcast per channel."""
    if x_self.shape != x_other_aligned.shape:
        raise ValueError(f"grid shapes differ: {x_self.shape} vs {x_other_aligned.shape}")
    if w.w_self.shape[0] != x_self.channels:
        raise ValueError(f"{w.w_self.shape[0]} weights for {x_self.channels} channels")
    a = x_self.values
    b = x_other_aligned.values
    return FeatureGrid(a * w.w_self[:, None, None] + b * w.w_other[:, None, None] + a)


def concat_channels(x_self: FeatureGrid, x_other: FeatureGrid) -> FeatureGrid:
    if x_self.shape[1:] != x_other.shape[1:]:
        raise ValueError("grids must share spatial size to concatenate")
    return FeatureGrid(np.concatenate([x_self.values, x_other.values], axis=0))


def global_average_pool(grid: FeatureGrid) -> np.ndarray:
    return grid.values.mean(axis=(1, 2))


@dataclass(frozen=True, eq=False)
class AttentionProjection:
    """Parameters of the channel-attention branch.

    ``hidden_w`` (R, 2C) / ``hidden_b`` (R,) form the shared layer before the
    rectifier; the two heads ``self_w``/``other_w`` (C, R) with biases (C,)
    produce the logits of each weight vector.
    """

    hidden_w: np.ndarray
    hidden_b: np.ndarray
    self_w: np.ndarray
    self_b: np.ndarray
    other_w: np.ndarray
    other_b: np.ndarray

    def __post_init__(self):
        for name in ("hidden_w", "hidden_b", "self_w", "self_b", "other_w", "other_b"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        R, C2 = self.hidden_w.shape
        if C2 % 2:
            raise ValueError("hidden_w must take an even (2C) input width")
        C = C2 // 2
        expected = {"hidden_b": (R,), "self_w": (C, R), "self_b": (C,), "other_w": (C, R), "other_b": (C,)}
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} must have shape {shape}, got {getattr(self, name).shape}")

    @property
    def channels(self) -> int:
        return self.hidden_w.shape[1] // 2

    @classmethod
    def zeros(cls, channels: int, hidden: int) -> "AttentionProjection":
        return cls(np.zeros((hidden, 2 * channels)), np.zeros(hidden),
                   np.zeros((channels, hidden)), np.zeros(channels),
                   np.zeros((channels, hidden)), np.zeros(channels))


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    # keep strictly inside (0, 1) even when the logistic saturates
    return np.clip(out, np.nextafter(0.0, 1.0), np.nextafter(1.0, 0.0))


def attention_weights_from_gap(concat_stats, projection: AttentionProjection) -> FusionWeights:
    """Pooled 2C statistics -> linear -> ReLU -> two linear heads -> sigmoid."""
    g = np.asarray(concat_stats, dtype=float).ravel()
    if g.shape[0] != projection.hidden_w.shape[1]:
        raise ValueError(f"expected {projection.hidden_w.shape[1]} pooled statistics, got {g.shape[0]}")
    hidden = np.maximum(projection.hidden_w @ g + projection.hidden_b, 0.0)
    w_self = _sigmoid(projection.self_w @ hidden + projection.self_b)
    w_other = _sigmoid(projection.other_w @ hidden + projection.other_b)
    return FusionWeights(w_self, w_other)


def adfm_forward(x_self: FeatureGrid, x_other_aligned: FeatureGrid,
                 projection: AttentionProjection) -> FeatureGrid:
    """Full fusion branch: concatenate, pool, derive weights, fuse."""
    stats = global_average_pool(concat_channels(x_self, x_other_aligned))
    return adfm_fuse(x_self, x_other_aligned, attention_weights_from_gap(stats, projection))
