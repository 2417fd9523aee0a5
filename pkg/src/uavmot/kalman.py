"""Constant-velocity Kalman filter over (cx, cy, w, h) box states.

Noise is proportional to the current box size, in the style of the BoT-SORT
width/height filter. The time step is fixed at one frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import BBox

NDIM = 4


@dataclass(frozen=True, eq=False)
class KalmanState:
    mean: np.ndarray  # (8,) cx, cy, w, h, vx, vy, vw, vh
    covariance: np.ndarray  # (8, 8)

    def to_bbox(self, min_size: float = 1e-3) -> BBox:
        """Box of the state's position part; size clamped to ``min_size``."""
        cx, cy, w, h = (float(v) for v in self.mean[:4])
        return BBox.from_center(cx, cy, max(w, min_size), max(h, min_size))


@dataclass(frozen=True)
class KalmanConfig:
    std_weight_position: float = 1.0 / 20
    std_weight_velocity: float = 1.0 / 160
    # multipliers on process / measurement noise; 0 gives a noiseless filter
    process_noise_scale: float = 1.0
    measurement_noise_scale: float = 1.0


class KalmanFilter:
    def __init__(self, config: KalmanConfig | None = None):
        self.config = config or KalmanConfig()
        self._motion_mat = np.eye(2 * NDIM)
        for i in range(NDIM):
            self._motion_mat[i, NDIM + i] = 1.0
        self._eye = np.eye(2 * NDIM)

    def initiate(self, measurement: BBox) -> KalmanState:
        cx, cy = measurement.center
        w, h = measurement.w, measurement.h
        mean = np.array([cx, cy, w, h, 0.0, 0.0, 0.0, 0.0])
        wp = self.config.std_weight_position
        wv = self.config.std_weight_velocity
        std = np.array([2 * wp * w, 2 * wp * h, 2 * wp * w, 2 * wp * h,
                        10 * wv * w, 10 * wv * h, 10 * wv * w, 10 * wv * h])
        return KalmanState(mean, np.diag(np.square(std)))

    def _process_noise(self, mean: np.ndarray) -> np.ndarray:
        w, h = abs(mean[2]), abs(mean[3])
        wp = self.config.std_weight_position
        wv = self.config.std_weight_velocity
        std = np.array([wp * w, wp * h, wp * w, wp * h, wv * w, wv * h, wv * w, wv * h])
        return np.diag(np.square(std) * self.config.process_noise_scale)

    def predict(self, state: KalmanState) -> KalmanState:
        F = self._motion_mat
        mean = F @ state.mean
        cov = F @ state.covariance @ F.T + self._process_noise(state.mean)
        return KalmanState(mean, 0.5 * (cov + cov.T))

    def update(self, state: KalmanState, measurement: BBox) -> KalmanState:
        cx, cy = measurement.center
        zs = (cx, cy, measurement.w, measurement.h)
        if not all(math.isfinite(v) for v in zs):
            raise ValueError("non-finite measurement")
        P = state.covariance
        w, h = abs(float(state.mean[2])), abs(float(state.mean[3]))
        wp = self.config.std_weight_position
        vw, vh = (wp * w) ** 2, (wp * h) ** 2
        r = np.array([vw, vh, vw, vh]) * self.config.measurement_noise_scale

        # H selects the first four state components, so H P H^T and P H^T are slices
        S = P[:NDIM, :NDIM] + np.diag(r)
        PHt = P[:, :NDIM]
        try:
            gain = np.linalg.solve(S, PHt.T).T
        except np.linalg.LinAlgError:
            gain = PHt @ np.linalg.pinv(S)
        mean = state.mean + gain @ (np.array(zs) - state.mean[:NDIM])
        mean[2] = max(mean[2], 1e-6)  # sizes stay positive
        mean[3] = max(mean[3], 1e-6)
        # Joseph form keeps the posterior symmetric PSD under rounding
        IKH = self._eye.copy()
        IKH[:, :NDIM] -= gain
        cov = IKH @ P @ IKH.T + (gain * r) @ gain.T
        return KalmanState(mean, 0.5 * (cov + cov.T))
