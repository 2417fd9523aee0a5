"""Synthetic multi-UAV scenarios and challenge-attribute labelling.

A scenario holds smooth ground-truth trajectories with exit/re-entry gaps,
noisy detections with appearance vectors, and event frames in which moving
targets leave clusters of non-zero pixels. Everything is a pure function of
the config's seed.

Default statistics follow the benchmark the tracker targets: 1-4 UAVs per
sequence (2.42 on average), about 1.55 exit/re-entry events per trajectory,
and visible roughly 92% of the time on 300-frame sequences.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Optional, Sequence, Union

import numpy as np

from .core import BBox, Detection, EventFrame, iou
from .metrics import GroundTruth, GTObject

log = logging.getLogger(__name__)

# P(n_uavs = 1..4); mean 2.42
N_UAV_PROBS = (0.20, 0.35, 0.28, 0.17)

ATTRIBUTES = ("TT", "ET", "SV", "FM", "LI", "SC", "OO")


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int = 0
    n_frames: int = 300
    frame_w: int = 640
    frame_h: int = 512
    n_uavs: Optional[int] = None  # None: drawn from N_UAV_PROBS
    exit_reentry_rate: float = 1.55  # mean exit/re-entry events per trajectory
    gap_range: tuple[int, int] = (5, 25)  # frames a target stays out of view
    speed_profile: str = "slow"  # "slow" or "fast"
    miss_rate: float = 0.0
    fp_rate: float = 0.0  # mean random false positives per frame
    loc_noise_std: float = 0.0  # px, on x, y, w, h
    appearance_noise_std: float = 0.0  # per embedding component
    clutter: bool = False
    clutter_rate: float = 0.3  # new background blobs per frame in clutter mode
    clutter_lifetime: tuple[int, int] = (4, 15)  # frames a blob stays
    clutter_appearance_std: float = 0.06  # blob vector = target base + this noise
    embedding_dim: int = 128
    size_range: tuple[float, float] = (8.0, 20.0)  # sqrt(w * h) in px
    aspect_ratio: float = 2.4
    det_conf_range: tuple[float, float] = (0.75, 0.95)
    fp_conf_range: tuple[float, float] = (0.3, 0.9)
    event_pixels_per_px: float = 1.0  # event pixels per px of displacement
    min_event_pixels: int = 4
    event_noise_density: float = 2e-5  # background noise events per pixel per frame
    brightness: Optional[float] = None  # mean RGB brightness, for the LI label
    annotation_interval: int = 1

    def __post_init__(self):
        if self.n_uavs is not None and not (1 <= self.n_uavs <= 4):
            raise ValueError("n_uavs must lie in [1, 4]")
        if self.n_frames < 1:
            raise ValueError("n_frames must be >= 1")
        if self.speed_profile not in ("slow", "fast"):
            raise ValueError("speed_profile must be 'slow' or 'fast'")
        for name in ("exit_reentry_rate", "miss_rate", "fp_rate", "loc_noise_std",
                     "appearance_noise_std", "event_pixels_per_px", "event_noise_density"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.miss_rate > 1:
            raise ValueError("miss_rate must lie in [0, 1]")
        lo, hi = self.size_range
        if not (0 < lo <= hi):
            raise ValueError("size_range must satisfy 0 < min <= max")
        if self.gap_range[0] < 1 or self.gap_range[1] < self.gap_range[0]:
            raise ValueError("gap_range must satisfy 1 <= min <= max")
        if self.annotation_interval < 1:
            raise ValueError("annotation_interval must be >= 1")

    def max_box(self) -> tuple[float, float]:
        s = self.size_range[1] * 1.2
        r = math.sqrt(self.aspect_ratio)
        return s * r, s / r


@dataclass
class Trajectory:
    identity: int
    centers: np.ndarray  # (n_frames, 2), frame f at row f - 1
    sizes: np.ndarray  # (n_frames, 2) w, h
    visible: np.ndarray  # (n_frames,) bool
    appearance: np.ndarray  # (D,) unit base vector

    def box(self, frame: int) -> BBox:
        cx, cy = self.centers[frame - 1]
        w, h = self.sizes[frame - 1]
        return BBox.from_center(float(cx), float(cy), float(w), float(h))

    @property
    def n_exits(self) -> int:
        v = self.visible.astype(int)
        return int(np.sum((v[:-1] == 1) & (v[1:] == 0)))


@dataclass
class Scenario:
    config: ScenarioConfig
    ground_truth: GroundTruth
    detections_by_frame: dict[int, list[Detection]]
    event_frames_by_frame: dict[int, EventFrame]
    trajectories: list[Trajectory]
    attribute_report: Optional["AttributeReport"] = None

    @property
    def attributes(self) -> set[str]:
        return self.attribute_report.labels if self.attribute_report is not None else set()

    @property
    def n_trajectories(self) -> int:
        return len(self.trajectories)

    @property
    def frames(self) -> range:
        return range(1, self.config.n_frames + 1)


def _unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def _reflect(p: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    span = hi - lo
    q = np.mod(p - lo, 2 * span)
    q = np.where(q > span, 2 * span - q, q)
    return lo + q


def _catmull_rom(times: np.ndarray, points: np.ndarray, n_frames: int) -> np.ndarray:
    """Uniform Catmull-Rom spline through ``points`` at ``times``, sampled at 0..n-1."""
    padded = np.vstack([points[:1], points, points[-1:]])
    out = np.empty((n_frames, 2))
    seg = 0
    for t in range(n_frames):
        while seg < len(times) - 2 and t >= times[seg + 1]:
            seg += 1
        t0, t1 = times[seg], times[seg + 1]
        u = (t - t0) / (t1 - t0)
        p0, p1, p2, p3 = padded[seg], padded[seg + 1], padded[seg + 2], padded[seg + 3]
        u2, u3 = u * u, u * u * u
        out[t] = 0.5 * ((2 * p1) + (-p0 + p2) * u + (2 * p0 - 5 * p1 + 4 * p2 - p3) * u2
                        + (-p0 + 3 * p1 - 3 * p2 + p3) * u3)
    return out


def _dash_target(rng, start: np.ndarray, length: float, lo, hi) -> np.ndarray:
    """A point ``length`` px away from ``start`` that stays inside [lo, hi]."""
    for _ in range(30):
        p = start + _unit(rng, 2) * length
        if np.all(p >= lo) and np.all(p <= hi):
            return p
    # head for the farthest corner instead
    corners = np.array([[lo[0], lo[1]], [lo[0], hi[1]], [hi[0], lo[1]], [hi[0], hi[1]]])
    far = corners[np.argmax(np.linalg.norm(corners - start, axis=1))]
    d = far - start
    return start + d * min(1.0, length / np.linalg.norm(d))


def _waypoints(rng, cfg: ScenarioConfig, lo, hi) -> tuple[np.ndarray, np.ndarray]:
    """Waypoint times and positions; fast tracks alternate hovering and dashes."""
    times = [0]
    pts = [lo + rng.random(2) * (hi - lo)]
    dashing = False
    while times[-1] < cfg.n_frames - 1:
        if cfg.speed_profile == "slow":
            dt = int(rng.integers(20, 41))
            nxt = _reflect(pts[-1] + _unit(rng, 2) * rng.uniform(0.5, 3.0) * dt, lo, hi)
        elif dashing:
            dt = int(rng.integers(3, 6))
            nxt = _dash_target(rng, pts[-1], rng.uniform(80.0, 110.0) * dt, lo, hi)
        else:
            dt = int(rng.integers(3, 7)) if len(times) > 1 else 8
            nxt = _reflect(pts[-1] + _unit(rng, 2) * rng.uniform(0.2, 1.5) * dt, lo, hi)
        if cfg.speed_profile == "fast":
            dashing = not dashing
        times.append(times[-1] + dt)
        pts.append(nxt)
    return np.array(times, dtype=float), np.array(pts)


def _visibility(rng, cfg: ScenarioConfig) -> np.ndarray:
    n = cfg.n_frames
    visible = np.ones(n, dtype=bool)
    n_gaps = int(rng.poisson(cfg.exit_reentry_rate))
    gmin, gmax = cfg.gap_range
    placed: list[tuple[int, int]] = []
    for _ in range(n_gaps):
        for _attempt in range(20):
            length = int(rng.integers(gmin, gmax + 1))
            if n <= 12:
                break
            start = int(rng.integers(6, n))  # 0-based; first frames always visible
            end = min(n, start + length)
            if all(end + 5 <= s or start >= e + 5 for s, e in placed):
                placed.append((start, end))
                visible[start:end] = False
                break
    return visible


def _trajectory(rng, cfg: ScenarioConfig, identity: int) -> Trajectory:
    n = cfg.n_frames
    r = math.sqrt(cfg.aspect_ratio)
    scale0 = rng.uniform(*cfg.size_range)
    period = rng.uniform(100.0, 300.0)
    phase = rng.uniform(0, 2 * math.pi)
    t = np.arange(n)
    scale = scale0 * (1.0 + 0.1 * np.sin(2 * math.pi * t / period + phase))
    sizes = np.stack([scale * r, scale / r], axis=1)
    mw, mh = cfg.max_box()
    lo = np.array([mw / 2 + 1, mh / 2 + 1])
    hi = np.array([cfg.frame_w - mw / 2 - 1, cfg.frame_h - mh / 2 - 1])
    times, pts = _waypoints(rng, cfg, lo, hi)
    centers = np.clip(_catmull_rom(times, pts, n), lo, hi)
    return Trajectory(identity, centers, sizes, _visibility(rng, cfg), _unit(rng, cfg.embedding_dim))


def _noisy_appearance(rng, base: np.ndarray, std: float) -> np.ndarray:
    if std == 0:
        return base.copy()
    v = base + rng.normal(0.0, std, base.shape)
    return v / np.linalg.norm(v)


def _noisy_box(rng, box: BBox, std: float) -> BBox:
    if std == 0:
        return box
    dx, dy, dw, dh = rng.normal(0.0, std, 4)
    return BBox(box.x + dx, box.y + dy, max(1.0, box.w + dw), max(1.0, box.h + dh))


def _target_events(rng, cfg: ScenarioConfig, box: BBox, motion: np.ndarray):
    """Event pixels for one target: a cluster over the box and a short trail."""
    speed = float(np.hypot(*motion))
    k = max(cfg.min_event_pixels, int(round(cfg.event_pixels_per_px * speed)))
    k = min(k, 400)
    trail = motion * min(1.0, 15.0 / speed) if speed > 0 else np.zeros(2)
    u = rng.random(k)
    xs = box.x + rng.random(k) * box.w - u * trail[0]
    ys = box.y + rng.random(k) * box.h - u * trail[1]
    return xs, ys


def _clutter_blob(rng, cfg: ScenarioConfig, trajs: list[Trajectory], frame: int):
    """A static background patch that looks like one of the targets."""
    mimic = trajs[int(rng.integers(len(trajs)))]
    scale = rng.uniform(*cfg.size_range)
    r = math.sqrt(cfg.aspect_ratio)
    w, h = scale * r, scale / r
    pos = np.array([rng.uniform(0, cfg.frame_w - w), rng.uniform(0, cfg.frame_h - h)])
    end = frame + int(rng.integers(cfg.clutter_lifetime[0], cfg.clutter_lifetime[1] + 1)) - 1
    return pos, w, h, _noisy_appearance(rng, mimic.appearance, cfg.clutter_appearance_std), end


def generate(config: ScenarioConfig) -> Scenario:
    cfg = config
    mw, mh = cfg.max_box()
    if mw + 2 >= cfg.frame_w or mh + 2 >= cfg.frame_h:
        raise ValueError(f"targets up to {mw:.1f}x{mh:.1f} px do not fit a {cfg.frame_w}x{cfg.frame_h} frame")
    rng = np.random.default_rng(cfg.seed)
    n_uavs = cfg.n_uavs if cfg.n_uavs is not None else int(rng.choice(4, p=N_UAV_PROBS)) + 1
    trajs = [_trajectory(rng, cfg, i + 1) for i in range(n_uavs)]

    blobs: list = []
    gt_frames: dict[int, list[GTObject]] = {}
    dets_by_frame: dict[int, list[Detection]] = {}
    events: dict[int, EventFrame] = {}
    for f in range(1, cfg.n_frames + 1):
        objs, dets = [], []
        ev_x, ev_y = [], []
        for tr in trajs:
            if not tr.visible[f - 1]:
                continue
            box = tr.box(f)
            objs.append(GTObject(tr.identity, box, True))
            prev = f - 2 if f > 1 else min(1, cfg.n_frames - 1)
            motion = tr.centers[f - 1] - tr.centers[prev] if f > 1 else tr.centers[prev] - tr.centers[0]
            xs, ys = _target_events(rng, cfg, box, motion)
            ev_x.append(xs)
            ev_y.append(ys)
            if rng.random() < cfg.miss_rate:
                continue
            conf = float(rng.uniform(*cfg.det_conf_range))
            dets.append(Detection(f, _noisy_box(rng, box, cfg.loc_noise_std), conf,
                                  _noisy_appearance(rng, tr.appearance, cfg.appearance_noise_std)))
        if cfg.clutter:
            blobs = [bl for bl in blobs if bl[4] >= f]
            for _ in range(int(rng.poisson(cfg.clutter_rate))):
                blobs.append(_clutter_blob(rng, cfg, trajs, f))
            for pos, w, h, app, _end in blobs:
                jitter = rng.normal(0.0, 0.5, 2)
                box = BBox(float(pos[0] + jitter[0]), float(pos[1] + jitter[1]), w, h)
                conf = float(rng.uniform(0.6, 0.9))
                dets.append(Detection(f, box, conf, _noisy_appearance(rng, app, cfg.appearance_noise_std)))
        for _ in range(int(rng.poisson(cfg.fp_rate))):
            scale = rng.uniform(*cfg.size_range)
            r = math.sqrt(cfg.aspect_ratio)
            w, h = scale * r, scale / r
            box = BBox(float(rng.uniform(0, cfg.frame_w - w)), float(rng.uniform(0, cfg.frame_h - h)), w, h)
            conf = float(rng.uniform(*cfg.fp_conf_range))
            dets.append(Detection(f, box, conf, _unit(rng, cfg.embedding_dim)))
        order = rng.permutation(len(dets))
        dets_by_frame[f] = [dets[i] for i in order]
        gt_frames[f] = objs

        n_noise = int(rng.poisson(cfg.event_noise_density * cfg.frame_w * cfg.frame_h))
        ev_x.append(rng.random(n_noise) * cfg.frame_w)
        ev_y.append(rng.random(n_noise) * cfg.frame_h)
        xs = np.clip(np.floor(np.concatenate(ev_x)), 0, cfg.frame_w - 1).astype(np.int64)
        ys = np.clip(np.floor(np.concatenate(ev_y)), 0, cfg.frame_h - 1).astype(np.int64)
        pol = rng.choice(np.array([-1, 1]), size=xs.size)
        # accumulate polarities per pixel
        flat = ys * cfg.frame_w + xs
        uniq, inv = np.unique(flat, return_inverse=True)
        acc = np.zeros(uniq.size, dtype=np.int64)
        np.add.at(acc, inv, pol)
        # a pixel that fired always keeps a non-zero count
        acc[acc == 0] = 1
        events[f] = EventFrame(cfg.frame_w, cfg.frame_h, uniq % cfg.frame_w, uniq // cfg.frame_w, acc)

    annotated = {f for f in range(1, cfg.n_frames + 1) if f % cfg.annotation_interval == 0} \
        if cfg.annotation_interval > 1 else set(range(1, cfg.n_frames + 1))
    gt = GroundTruth({f: objs for f, objs in gt_frames.items() if f in annotated and objs}, annotated)
    scenario = Scenario(cfg, gt, dets_by_frame, events, trajs)
    dense_gt = GroundTruth({f: o for f, o in gt_frames.items() if o}, set(range(1, cfg.n_frames + 1)))
    scenario.attribute_report = classify_attributes(dense_gt, brightness=cfg.brightness,
                                                    single_modality=True, warn=False)
    return scenario


# ------------------------------------------------------------- attributes


class AttributeResult(NamedTuple):
    present: Optional[bool]  # None when skipped
    statistic: Optional[float]
    note: str = ""


@dataclass
class AttributeReport:
    results: dict[str, AttributeResult]

    @property
    def labels(self) -> set[str]:
        return {k for k, r in self.results.items() if r.present}


def _scale(b: BBox) -> float:
    return math.sqrt(b.w * b.h)


def _frame_fraction(gt: GroundTruth, pred) -> float:
    frames = sorted(gt.annotated_frames)
    if not frames:
        return 0.0
    hits = sum(1 for f in frames if pred([o for o in gt.frames.get(f, ()) if o.visible]))
    return hits / len(frames)


def _size_rule(gts: Sequence[GroundTruth], pred) -> tuple[bool, float]:
    fracs = [_frame_fraction(g, lambda objs: any(pred(_scale(o.bbox)) for o in objs)) for g in gts]
    return all(fr > 0.5 for fr in fracs), min(fracs)


def _tracks(gt: GroundTruth) -> dict[int, list[tuple[int, BBox]]]:
    out: dict[int, list[tuple[int, BBox]]] = {}
    for f in sorted(gt.annotated_frames):
        for o in gt.frames.get(f, ()):
            if o.visible:
                out.setdefault(o.identity, []).append((f, o.bbox))
    return out


def _max_window_ratio(gt: GroundTruth, window: int = 200) -> float:
    best = 1.0
    for pts in _tracks(gt).values():
        frames = np.array([f for f, _ in pts])
        scales = np.array([_scale(b) for _, b in pts])
        for i in range(len(frames)):
            j = np.searchsorted(frames, frames[i] + window, side="left")
            seg = scales[i:j]
            best = max(best, float(seg.max() / seg.min()))
    return best


def _fast_motion_fraction(gt: GroundTruth, threshold: float = 60.0) -> float:
    from .core import center_distance
    fast_frames = set()
    for pts in _tracks(gt).values():
        for (f0, b0), (f1, b1) in zip(pts, pts[1:]):
            if f1 == f0 + 1 and center_distance(b0, b1) > threshold:
                fast_frames.add(f1)
    n = len(gt.annotated_frames)
    return len(fast_frames) / n if n else 0.0


def _similar_scale(objs) -> bool:
    scales = [_scale(o.bbox) for o in objs]
    return any(max(a, b) / min(a, b) <= 2.0 for a, b in itertools.combinations(scales, 2))


def _overlap_count(gt: GroundTruth) -> int:
    count = 0
    for f in gt.annotated_frames:
        objs = [o for o in gt.frames.get(f, ()) if o.visible]
        count += sum(1 for a, b in itertools.combinations(objs, 2) if iou(a.bbox, b.bbox) > 0.0)
    return count


def classify_attributes(gt: GroundTruth, gt2: Optional[GroundTruth] = None,
                        brightness: Union[None, float, Sequence[float]] = None,
                        single_modality: bool = False, warn: bool = True) -> AttributeReport:
    """Label a sequence with the seven challenge attributes.

    ``gt`` and ``gt2`` are the RGB and IR annotations. The two tiny-target
    rules need both unless ``single_modality`` relaxes them to ``gt`` alone.
    ``brightness`` is the mean RGB intensity (or per-frame means); without it
    the low-illumination rule is skipped.
    """
    res: dict[str, AttributeResult] = {}
    if gt2 is not None or single_modality:
        gts = [gt] if gt2 is None else [gt, gt2]
        tt, tt_frac = _size_rule(gts, lambda s: 8.0 < s <= 16.0)
        et, et_frac = _size_rule(gts, lambda s: s < 8.0)
        res["TT"] = AttributeResult(tt, tt_frac, "min fraction of frames with a target in (8, 16] px")
        res["ET"] = AttributeResult(et, et_frac, "min fraction of frames with a target under 8 px")
    else:
        res["TT"] = AttributeResult(None, None, "skipped: needs both modalities")
        res["ET"] = AttributeResult(None, None, "skipped: needs both modalities")

    ratio = _max_window_ratio(gt)
    res["SV"] = AttributeResult(ratio > 4.0, ratio, "max scale ratio within a 200-frame window")
    fm = _fast_motion_fraction(gt)
    res["FM"] = AttributeResult(fm > 0.3, fm, "fraction of frames with a >60 px centroid jump")

    if brightness is None:
        if warn:
            log.warning("no brightness data; low-illumination attribute skipped")
        res["LI"] = AttributeResult(None, None, "skipped: no brightness data")
    else:
        mean_b = float(np.mean(np.asarray(brightness, dtype=float)))
        res["LI"] = AttributeResult(mean_b <= 50.0, mean_b, "mean RGB brightness")

    sc = _frame_fraction(gt, lambda objs: len(objs) > 1 and _similar_scale(objs))
    res["SC"] = AttributeResult(sc > 0.5, sc, "fraction of frames with similar-scale targets")
    oo = _overlap_count(gt)
    res["OO"] = AttributeResult(oo > 1, float(oo), "overlapping box pairs across frames")
    return AttributeReport({k: res[k] for k in ATTRIBUTES})
