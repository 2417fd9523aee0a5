"""Text formats for detections, ground truth, tracks, embeddings, events and grids.

All readers raise :class:`FormatError` naming the file and line on bad input.
"""

from __future__ import annotations

import dataclasses
import math
import os
from collections import defaultdict
from dataclasses import dataclass, field
from io import StringIO
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Optional, Sequence, Union

import numpy as np

from .core import BBox, Detection, EventFrame, Modality, normalize_embedding
from .distance import AssociationThresholds
from .fusion_kernels import FeatureGrid
from .kalman import KalmanConfig
from .metrics import GroundTruth, GTObject

PathLike = Union[str, os.PathLike]


class FormatError(ValueError):
    def __init__(self, path, line: Optional[int], msg: str):
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {msg}")
        self.path = path
        self.line = line


def _open_text(path: PathLike):
    """Whole file as a text stream; undecodable bytes become a FormatError."""
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        return StringIO(raw.decode("utf-8"))
    except UnicodeDecodeError as exc:
        line = raw[:exc.start].count(b"\n") + 1
        raise FormatError(path, line, "file is not valid UTF-8 text") from None


# ---------------------------------------------------------------- MOT text


class MotRecord(NamedTuple):
    frame: int
    id: int
    bbox: BBox
    conf: float
    extra: tuple[float, ...] = (-1.0, -1.0, -1.0)


def _fmt_extra(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else f"{v:.2f}"


def format_mot_line(rec: MotRecord) -> str:
    b = rec.bbox
    extra = list(rec.extra[:3]) + [-1.0] * (3 - len(rec.extra[:3]))
    return ",".join([str(rec.frame), str(rec.id), f"{b.x:.2f}", f"{b.y:.2f}", f"{b.w:.2f}", f"{b.h:.2f}",
                     f"{rec.conf:.2f}"] + [_fmt_extra(v) for v in extra])


def parse_mot_line(line: str, path="<string>", lineno: Optional[int] = None) -> MotRecord:
    parts = [p.strip() for p in line.split(",")]
    if len(parts) < 6:
        raise FormatError(path, lineno, f"expected at least 6 comma-separated fields, got {len(parts)}")
    try:
        nums = [float(p) for p in parts[:10]]  # fields past the tenth are ignored
    except ValueError as exc:
        raise FormatError(path, lineno, f"non-numeric field ({exc})") from None
    if not all(math.isfinite(v) for v in nums):
        raise FormatError(path, lineno, "non-finite field")
    frame, ident = nums[0], nums[1]
    if not frame.is_integer() or not ident.is_integer():
        raise FormatError(path, lineno, "frame and id must be integers")
    x, y, w, h = nums[2:6]
    if w <= 0 or h <= 0:
        raise FormatError(path, lineno, f"non-positive box size w={w}, h={h}")
    conf = nums[6] if len(nums) > 6 else 1.0
    extra = tuple(nums[7:10]) + (-1.0,) * max(0, 3 - len(nums[7:10]))
    return MotRecord(int(frame), int(ident), BBox(x, y, w, h), conf, extra)


def read_mot(path: PathLike) -> list[MotRecord]:
    """Parse ``frame,id,x,y,w,h,conf,a,b,c`` lines (fields past ``c`` are ignored)."""
    records = []
    with _open_text(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            records.append(parse_mot_line(line, path, lineno))
    return records


def write_mot(path: PathLike, records: Iterable[MotRecord]) -> None:
    """Write records sorted by frame, then id (stable for equal keys)."""
    recs = sorted(records, key=lambda r: (r.frame, r.id))
    with open(path, "w") as fh:
        for r in recs:
            fh.write(format_mot_line(r) + "\n")


def detections_from_records(records: Sequence[MotRecord],
                            embeddings: Optional[Mapping[tuple[int, int], np.ndarray]] = None,
                            modality: Modality = Modality.RGB) -> dict[int, list[Detection]]:
    """Group records into per-frame detections, joining embeddings on (frame, det_index).

    ``det_index`` is the 0-based position of a detection among its frame's
    rows in file order.
    """
    out: dict[int, list[Detection]] = defaultdict(list)
    for r in records:
        idx = len(out[r.frame])
        emb = embeddings.get((r.frame, idx)) if embeddings else None
        conf = min(1.0, max(0.0, r.conf))
        out[r.frame].append(Detection(r.frame, r.bbox, conf, emb, modality))
    return dict(out)


def ground_truth_from_records(records: Sequence[MotRecord], annotated_frames=None) -> GroundTruth:
    """Build ground truth; a record is hidden when its visibility field (a) is 0."""
    frames: dict[int, list[GTObject]] = defaultdict(list)
    for r in records:
        frames[r.frame].append(GTObject(r.id, r.bbox, r.extra[0] != 0))
    return GroundTruth(dict(frames), annotated_frames)


def records_from_results(results) -> list[MotRecord]:
    return [MotRecord(res.frame, o.track_id, o.bbox, o.confidence)
            for res in results for o in res.outputs]


def predictions_from_records(records: Sequence[MotRecord]) -> dict[int, list[tuple[int, BBox]]]:
    out: dict[int, list[tuple[int, BBox]]] = defaultdict(list)
    for r in records:
        out[r.frame].append((r.id, r.bbox))
    return dict(out)


# ----------------------------------------------------------- event frames


def write_event_frames(path: PathLike, frames: Mapping[int, EventFrame]) -> None:
    """Sparse text event format; pixels written in row-major order."""
    keys = sorted(frames)
    if not keys:
        raise ValueError("no event frames to write")
    w, h = frames[keys[0]].width, frames[keys[0]].height
    lines = [f"EVT {w} {h} {len(keys)}"]
    for k in keys:
        fr = frames[k]
        if (fr.width, fr.height) != (w, h):
            raise ValueError("all event frames of a sequence must share one size")
        order = np.lexsort((fr.xs, fr.ys))
        lines.append(f"F {k} {order.size}")
        lines.extend(f"{x} {y} {v}" for x, y, v in zip(fr.xs[order].tolist(), fr.ys[order].tolist(),
                                                          fr.vs[order].tolist()))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _ints(parts, path, lineno, what):
    try:
        return [int(p) for p in parts]
    except ValueError:
        raise FormatError(path, lineno, f"non-integer {what}") from None


def read_event_frames(path: PathLike) -> dict[int, EventFrame]:
    with _open_text(path) as fh:
        lines = [(i, ln.split()) for i, ln in enumerate(fh, 1) if ln.strip()]
    if not lines:
        raise FormatError(path, None, "empty event file")
    lineno, head = lines[0]
    if len(head) != 4 or head[0] != "EVT":
        raise FormatError(path, lineno, "expected header 'EVT <width> <height> <n_frames>'")
    width, height, n_frames = _ints(head[1:], path, lineno, "header field")
    if width <= 0 or height <= 0 or n_frames < 0:
        raise FormatError(path, lineno, "invalid header values")
    out: dict[int, EventFrame] = {}
    pos = 1
    for _ in range(n_frames):
        if pos >= len(lines):
            raise FormatError(path, None, f"header announces {n_frames} frames, file ends early")
        lineno, parts = lines[pos]
        if len(parts) != 3 or parts[0] != "F":
            raise FormatError(path, lineno, "expected frame line 'F <index> <k>'")
        index, k = _ints(parts[1:], path, lineno, "frame field")
        if k < 0:
            raise FormatError(path, lineno, "negative pixel count")
        if index in out:
            raise FormatError(path, lineno, f"duplicate frame {index}")
        pos += 1
        xs, ys, vs = [], [], []
        seen = set()
        for _ in range(k):
            if pos >= len(lines):
                raise FormatError(path, None, f"frame {index} announces {k} pixels, file ends early")
            lineno, parts = lines[pos]
            if len(parts) != 3:
                raise FormatError(path, lineno, "expected pixel line 'x y v'")
            x, y, v = _ints(parts, path, lineno, "pixel field")
            if not (0 <= x < width and 0 <= y < height):
                raise FormatError(path, lineno, f"pixel ({x}, {y}) outside {width}x{height}")
            if v == 0:
                raise FormatError(path, lineno, "pixel value 0 is background and must not be listed")
            if (x, y) in seen:
                raise FormatError(path, lineno, f"duplicate pixel ({x}, {y}) in frame {index}")
            seen.add((x, y))
            xs.append(x)
            ys.append(y)
            vs.append(v)
            pos += 1
        out[index] = EventFrame(width, height, np.array(xs, dtype=np.int64),
                                np.array(ys, dtype=np.int64), np.array(vs, dtype=np.int64))
    if pos != len(lines):
        raise FormatError(path, lines[pos][0], "trailing content after the last frame")
    return out


# ------------------------------------------------------------- embeddings


def read_embeddings(path: PathLike, dim: Optional[int] = None) -> dict[tuple[int, int], np.ndarray]:
    """Read ``frame det_index v1 ... vD`` lines into unit vectors keyed by (frame, det_index)."""
    out: dict[tuple[int, int], np.ndarray] = {}
    with _open_text(path) as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if len(parts) < 3:
                raise FormatError(path, lineno, "expected 'frame det_index v1 ... vD'")
            frame, idx = _ints(parts[:2], path, lineno, "frame/det_index")
            try:
                vec = np.array([float(p) for p in parts[2:]])
            except ValueError:
                raise FormatError(path, lineno, "non-numeric embedding component") from None
            if dim is None:
                dim = vec.size
            elif vec.size != dim:
                raise FormatError(path, lineno, f"embedding dimension {vec.size} != {dim}")
            if (frame, idx) in out:
                raise FormatError(path, lineno, f"duplicate embedding for frame {frame}, detection {idx}")
            try:
                out[(frame, idx)] = normalize_embedding(vec)
            except ValueError as exc:
                raise FormatError(path, lineno, str(exc)) from None
    return out


def write_embeddings(path: PathLike, embeddings: Mapping[tuple[int, int], np.ndarray]) -> None:
    with open(path, "w") as fh:
        for (frame, idx) in sorted(embeddings):
            vec = np.asarray(embeddings[(frame, idx)], dtype=float)
            fh.write(f"{frame} {idx} " + " ".join(f"{v:.9g}" for v in vec) + "\n")


def embeddings_from_detections(dets_by_frame: Mapping[int, Sequence[Detection]]) -> dict[tuple[int, int], np.ndarray]:
    return {(f, i): d.appearance for f, dets in dets_by_frame.items()
            for i, d in enumerate(dets) if d.appearance is not None}


# ------------------------------------------------------------------ grids


def write_grid(path: PathLike, grid: FeatureGrid) -> None:
    """``GRID C H W`` header, then one line of W values per (channel, row)."""
    C, H, W = grid.shape
    with open(path, "w") as fh:
        fh.write(f"GRID {C} {H} {W}\n")
        for row in grid.values.reshape(C * H, W):
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def read_grid(path: PathLike) -> FeatureGrid:
    with _open_text(path) as fh:
        text = fh.read()
    lines = text.splitlines()
    if not lines:
        raise FormatError(path, None, "empty grid file")
    head = lines[0].split()
    if len(head) != 4 or head[0] != "GRID":
        raise FormatError(path, 1, "expected header 'GRID <C> <H> <W>'")
    C, H, W = _ints(head[1:], path, 1, "header field")
    if min(C, H, W) <= 0:
        raise FormatError(path, 1, "grid dimensions must be positive")
    try:
        vals = np.array([float(t) for t in " ".join(lines[1:]).split()])
    except ValueError:
        raise FormatError(path, None, "non-numeric grid value") from None
    if vals.size != C * H * W:
        raise FormatError(path, None, f"expected {C * H * W} values, found {vals.size}")
    if not np.all(np.isfinite(vals)):
        raise FormatError(path, None, "non-finite grid value")
    return FeatureGrid(vals.reshape(C, H, W))


# ------------------------------------------------------------- run config


@dataclass
class RunConfig:
    """Flat ``key = value`` configuration covering tracker, thresholds, Kalman and simulator."""

    # tracker
    det_conf_min: float = 0.3
    new_track_conf: float = 0.7
    n_init: int = 3
    max_age: int = 30
    appearance_momentum: float = 0.9
    use_motion_embedding: bool = True
    # association thresholds
    theta_iou: float = 0.9
    theta_app: float = 0.2
    theta_motion: float = 0.2
    match_cost_max: float = 0.999
    # kalman
    std_weight_position: float = 1.0 / 20
    std_weight_velocity: float = 1.0 / 160
    process_noise_scale: float = 1.0
    measurement_noise_scale: float = 1.0
    # simulator
    seed: int = 0
    n_frames: int = 300
    frame_w: int = 640
    frame_h: int = 512
    n_uavs: Optional[int] = None
    exit_reentry_rate: float = 1.55
    gap_range: tuple[int, int] = (5, 25)
    speed_profile: str = "slow"
    miss_rate: float = 0.0
    fp_rate: float = 0.0
    loc_noise_std: float = 0.0
    appearance_noise_std: float = 0.0
    clutter: bool = False
    clutter_rate: float = 0.3
    clutter_lifetime: tuple[int, int] = (4, 15)
    clutter_appearance_std: float = 0.06
    embedding_dim: int = 128
    size_range: tuple[float, float] = (8.0, 20.0)
    aspect_ratio: float = 2.4
    det_conf_range: tuple[float, float] = (0.75, 0.95)
    fp_conf_range: tuple[float, float] = (0.3, 0.9)
    event_pixels_per_px: float = 1.0
    min_event_pixels: int = 4
    event_noise_density: float = 2e-5
    brightness: Optional[float] = None
    annotation_interval: int = 1
    # paths
    dets: Optional[str] = None
    events: Optional[str] = None
    emb: Optional[str] = None
    gt: Optional[str] = None
    out: Optional[str] = None

    def tracker_config(self):
        from .tracker import TrackerConfig
        return TrackerConfig(
            det_conf_min=self.det_conf_min,
            new_track_conf=self.new_track_conf,
            thresholds=AssociationThresholds(self.theta_iou, self.theta_app, self.theta_motion,
                                             self.match_cost_max),
            n_init=self.n_init,
            max_age=self.max_age,
            appearance_momentum=self.appearance_momentum,
            use_motion_embedding=self.use_motion_embedding,
            kalman=KalmanConfig(self.std_weight_position, self.std_weight_velocity,
                                self.process_noise_scale, self.measurement_noise_scale),
        )

    def scenario_config(self):
        from .simulator import ScenarioConfig
        names = {f.name for f in dataclasses.fields(ScenarioConfig)}
        return ScenarioConfig(**{k: v for k, v in dataclasses.asdict(self).items() if k in names})


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _convert(raw: str, ftype: str, path, lineno):
    optional = "Optional" in ftype or "None" in ftype
    if optional and raw.lower() in ("none", ""):
        return None
    try:
        if "tuple" in ftype:
            conv = int if "int" in ftype else float
            parts = [conv(x) for x in raw.split(",")]
            if len(parts) != 2:
                raise ValueError(raw)
            return tuple(parts)
        if "bool" in ftype:
            low = raw.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError(raw)
        if "int" in ftype:
            return int(raw)
        if "float" in ftype:
            return float(raw)
    except ValueError:
        raise FormatError(path, lineno, f"cannot parse {raw!r} as {ftype}") from None
    return raw


def read_run_config(path: PathLike) -> RunConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment; unknown keys are errors."""
    types = {f.name: str(f.type) for f in dataclasses.fields(RunConfig)}
    values = {}
    with _open_text(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise FormatError(path, lineno, "expected 'key = value'")
            key, raw = (s.strip() for s in line.split("=", 1))
            if key not in types:
                raise FormatError(path, lineno, f"unknown key {key!r}")
            if key in values:
                raise FormatError(path, lineno, f"duplicate key {key!r}")
            values[key] = _convert(raw, types[key], path, lineno)
    try:
        return RunConfig(**values)
    except (TypeError, ValueError) as exc:
        raise FormatError(path, None, str(exc)) from None


def write_run_config(path: PathLike, cfg: RunConfig) -> None:
    with open(path, "w") as fh:
        for f in dataclasses.fields(RunConfig):
            v = getattr(cfg, f.name)
            if v is None:
                continue
            if isinstance(v, bool):
                text = str(v).lower()
            elif isinstance(v, tuple):
                text = ", ".join(repr(x) for x in v)
            else:
                text = repr(v) if isinstance(v, float) else str(v)
            fh.write(f"{f.name} = {text}\n")
