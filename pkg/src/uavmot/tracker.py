"""Three-stage association tracker with event-derived motion embeddings.

Per frame: predict every live track, then

1. confirmed tracks vs. all detections, cost ``min(d_iou, d_app)``;
2. leftover confirmed and lost tracks vs. leftover detections, appearance only;
3. tentative tracks vs. what remains, IOU-gated ``max(d_app, d_motion)``.

Each stage is solved with the Hungarian method; a detection consumed by one
stage is never offered to a later one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Optional, Sequence

import numpy as np

from .assignment import solve
from .core import BBox, Detection, EventFrame, MotionEmbedding, Track, TrackStatus
from .distance import AssociationThresholds, build_cost_matrix
from .kalman import KalmanConfig, KalmanFilter, KalmanState
from .motion import motion_embedding


@dataclass(frozen=True)
class TrackerConfig:
    det_conf_min: float = 0.3
    new_track_conf: float = 0.7
    thresholds: AssociationThresholds = field(default_factory=AssociationThresholds)
    n_init: int = 3
    max_age: int = 30
    appearance_momentum: float = 0.9
    use_motion_embedding: bool = True
    kalman: KalmanConfig = field(default_factory=KalmanConfig)

    def __post_init__(self):
        if not (0.0 <= self.det_conf_min <= self.new_track_conf <= 1.0):
            raise ValueError("need 0 <= det_conf_min <= new_track_conf <= 1")
        if self.n_init < 1 or self.max_age < 1:
            raise ValueError("n_init and max_age must be >= 1")
        if not (0.0 <= self.appearance_momentum <= 1.0):
            raise ValueError("appearance_momentum must lie in [0, 1]")


class TrackOutput(NamedTuple):
    track_id: int
    bbox: BBox
    confidence: float


@dataclass
class FrameResult:
    frame: int
    outputs: list[TrackOutput] = field(default_factory=list)


class MMASortTracker:
    """Online multi-object tracker; one instance per sequence."""

    def __init__(self, config: Optional[TrackerConfig] = None):
        self.config = config or TrackerConfig()
        self.kf = KalmanFilter(self.config.kalman)
        self.tracks: list[Track] = []
        self.frame: Optional[int] = None
        self._next_id = 1
        self._event_size: Optional[tuple[int, int]] = None

    def _check_frame(self, detections: Sequence[Detection], frame: Optional[int]) -> int:
        frames = {d.frame for d in detections}
        if len(frames) > 1:
            raise ValueError(f"detections span several frames: {sorted(frames)}")
        if len({d.modality for d in detections}) > 1:
            raise ValueError("detections mix modalities")
        if frame is None:
            frame = frames.pop() if frames else (1 if self.frame is None else self.frame + 1)
        elif frames and frames.pop() != frame:
            raise ValueError("detection frame index disagrees with the frame argument")
        if self.frame is not None and frame <= self.frame:
            raise ValueError(f"frame {frame} is not after previous frame {self.frame}")
        return frame

    def _check_events(self, event_frame: EventFrame):
        size = (event_frame.width, event_frame.height)
        if self._event_size is None:
            self._event_size = size
        elif size != self._event_size:
            raise ValueError(f"event frame size {size} differs from earlier {self._event_size}")

    def _motion_for(self, event_frame: Optional[EventFrame], det: Detection) -> Optional[MotionEmbedding]:
        if event_frame is None:
            return None
        try:
            return motion_embedding(event_frame, det.bbox)
        except ValueError:
            return None

    def process_frame(self, detections: Sequence[Detection], event_frame: Optional[EventFrame] = None,
                      frame: Optional[int] = None) -> FrameResult:
        cfg = self.config
        th = cfg.thresholds
        frame = self._check_frame(detections, frame)
        use_motion = cfg.use_motion_embedding
        if use_motion and event_frame is not None:
            self._check_events(event_frame)
        else:
            event_frame = None
        self.frame = frame

        dets = [d for d in detections if d.confidence >= cfg.det_conf_min]
        det_motion = [self._motion_for(event_frame, d) for d in dets] if event_frame is not None else None

        for t in self.tracks:
            if t.status == TrackStatus.LOST:
                # no size drift while coasting without observations
                mean = t.state.mean.copy()
                mean[6:8] = 0.0
                t.state = KalmanState(mean, t.state.covariance)
            t.state = self.kf.predict(t.state)
            t.age += 1
            t.time_since_update += 1

        remaining = list(range(len(dets)))
        matched: list[tuple[Track, int]] = []

        def run_stage(stage: int, pool: list[Track]) -> list[Track]:
            nonlocal remaining
            if not pool or not remaining:
                return pool
            sub_dets = [dets[j] for j in remaining]
            sub_motion = [det_motion[j] for j in remaining] if det_motion is not None else None
            costs = build_cost_matrix(pool, sub_dets, stage, th, det_motion=sub_motion,
                                      use_motion=stage == 3 and event_frame is not None)
            result = solve(costs, th.match_cost_max)
            for r, c, _ in result.matches:
                matched.append((pool[r], remaining[c]))
            remaining = [remaining[c] for c in result.unmatched_detections]
            return [pool[r] for r in result.unmatched_tracks]

        confirmed = [t for t in self.tracks if t.status == TrackStatus.CONFIRMED]
        lost = [t for t in self.tracks if t.status == TrackStatus.LOST]
        tentative = [t for t in self.tracks if t.status == TrackStatus.TENTATIVE]

        left_confirmed = run_stage(1, confirmed)
        run_stage(2, left_confirmed + lost)
        run_stage(3, tentative)

        matched_ids = set()
        for track, j in matched:
            self._apply_match(track, dets[j], det_motion[j] if det_motion is not None else None)
            matched_ids.add(track.id)

        for t in self.tracks:
            if t.id in matched_ids:
                continue
            if t.status == TrackStatus.TENTATIVE:
                t.status = TrackStatus.REMOVED
            elif t.status == TrackStatus.CONFIRMED:
                t.status = TrackStatus.LOST
            if t.status == TrackStatus.LOST and t.time_since_update > cfg.max_age:
                t.status = TrackStatus.REMOVED
        self.tracks = [t for t in self.tracks if t.status != TrackStatus.REMOVED]

        for j in remaining:
            det = dets[j]
            if det.confidence >= cfg.new_track_conf:
                self._spawn(det, det_motion[j] if det_motion is not None else None)

        outputs = [TrackOutput(t.id, t.last_box, t.confidence) for t in self.tracks
                   if t.status == TrackStatus.CONFIRMED and t.time_since_update == 0]
        outputs.sort(key=lambda o: o.track_id)
        return FrameResult(frame, outputs)

    def _apply_match(self, track: Track, det: Detection, motion: Optional[MotionEmbedding]):
        cfg = self.config
        track.state = self.kf.update(track.state, det.bbox)
        if det.appearance is not None:
            if track.appearance is None:
                track.appearance = det.appearance
            else:
                a = cfg.appearance_momentum
                feat = a * track.appearance + (1.0 - a) * det.appearance
                norm = np.linalg.norm(feat)
                track.appearance = feat / norm if norm > 0 else det.appearance
        if motion is not None:
            track.motion = motion
        track.time_since_update = 0
        track.hits += 1
        track.last_box = det.bbox
        track.confidence = det.confidence
        if track.status == TrackStatus.LOST:
            track.status = TrackStatus.CONFIRMED
        elif track.status == TrackStatus.TENTATIVE and track.hits >= cfg.n_init:
            track.status = TrackStatus.CONFIRMED

    def _spawn(self, det: Detection, motion: Optional[MotionEmbedding]):
        status = TrackStatus.CONFIRMED if self.config.n_init <= 1 else TrackStatus.TENTATIVE
        track = Track(
            id=self._next_id,
            state=self.kf.initiate(det.bbox),
            status=status,
            appearance=det.appearance,
            motion=motion,
            last_box=det.bbox,
            confidence=det.confidence,
        )
        self._next_id += 1
        self.tracks.append(track)

    def run_sequence(self, detections_by_frame: Mapping[int, Sequence[Detection]],
                     event_frames_by_frame: Optional[Mapping[int, EventFrame]] = None,
                     frames: Optional[Iterable[int]] = None) -> list[FrameResult]:
        """Feed a whole sequence through :meth:`process_frame`.

        By default every frame from the first to the last index seen in the
        inputs is processed, including frames without detections.
        """
        events = event_frames_by_frame or {}
        if frames is None:
            keys = set(detections_by_frame) | set(events)
            if not keys:
                return []
            frames = range(min(keys), max(keys) + 1)
        return [self.process_frame(detections_by_frame.get(f, ()), events.get(f), frame=f)
                for f in frames]


def run_sequence(detections_by_frame, event_frames_by_frame=None, config: Optional[TrackerConfig] = None,
                 frames=None) -> list[FrameResult]:
    return MMASortTracker(config).run_sequence(detections_by_frame, event_frames_by_frame, frames)
