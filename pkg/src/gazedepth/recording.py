"""Gaze recordings: on-disk format, dispersion-based fixation detection and
per-fixation depth aggregation."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np
from PIL import Image
from sklearn.base import BaseEstimator, ClusterMixin

from .geometry import CameraIntrinsics

GAZE_HEADER = "t_ms,x_px,y_px,depth_m,valid"
FRAMES_HEADER = "t_ms,frame_file"
META_KEYS = ("participant", "condition", "depth_level_m", "h_fov_deg", "v_fov_deg",
             "res_x", "res_y", "frame_rate_hz")


class RecordingLoadError(ValueError):
    pass


class MissingDepthError(ValueError):
    """No sample of a fixation carries a depth value."""


class GazeSample(NamedTuple):
    t: float
    x: float
    y: float
    depth: float | None
    valid: bool


def _fmt(value: float) -> str:
    # repr gives the shortest string that parses back to the same float
    return repr(float(value))


def _readonly(a, dtype):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(eq=False)
class GazeRecording:
    """Timestamped gaze samples plus the egocentric frames they refer to.

    ``depth`` holds NaN where the depth is missing. Frames are referenced by
    file name relative to ``root``; the simulator may instead hand over
    in-memory rasters through ``frame_cache``.
    """

    intrinsics: CameraIntrinsics
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    depth: np.ndarray
    valid: np.ndarray
    frame_times: np.ndarray
    frame_files: list[str]
    meta: dict[str, str]
    root: Path | None = None
    frame_cache: dict[str, np.ndarray] = field(default_factory=dict, repr=False)
    # simulator ground truth (camera poses per frame file); not part of the file format
    extras: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.t = _readonly(self.t, float)
        self.x = _readonly(self.x, float)
        self.y = _readonly(self.y, float)
        self.depth = _readonly(self.depth, float)
        self.valid = _readonly(self.valid, bool)
        self.frame_times = _readonly(self.frame_times, float)
        n = len(self.t)
        if not (len(self.x) == len(self.y) == len(self.depth) == len(self.valid) == n):
            raise ValueError("sample arrays must have equal length")
        if len(self.frame_times) != len(self.frame_files):
            raise ValueError("frame_times and frame_files must have equal length")

    def __len__(self):
        return len(self.t)

    @property
    def samples(self) -> list[GazeSample]:
        return [GazeSample(float(t), float(x), float(y),
                           None if math.isnan(d) else float(d), bool(v))
                for t, x, y, d, v in zip(self.t, self.x, self.y, self.depth, self.valid)]

    @property
    def participant(self) -> str:
        return self.meta.get("participant", "")

    @property
    def condition(self) -> str:
        return self.meta.get("condition", "")

    @property
    def depth_level(self) -> float:
        return float(self.meta.get("depth_level_m", "nan"))

    @property
    def sample_rate(self) -> float:
        """Median sampling rate in Hz."""
        if len(self.t) < 2:
            return float("nan")
        dt = np.median(np.diff(self.t))
        return 1000.0 / dt if dt > 0 else float("inf")

    def frame_index_at(self, t_ms: float) -> int:
        """Index of the latest frame with timestamp <= ``t_ms``."""
        i = int(np.searchsorted(self.frame_times, t_ms, side="right")) - 1
        return max(i, 0)

    def frame(self, index: int) -> np.ndarray:
        name = self.frame_files[index]
        if name not in self.frame_cache:
            if self.root is None:
                raise FileNotFoundError(f"frame {name!r} is neither cached nor on disk")
            with Image.open(self.root / name) as im:
                self.frame_cache[name] = np.asarray(im.convert("RGB"))
        return self.frame_cache[name]

    def frame_at(self, t_ms: float) -> np.ndarray:
        return self.frame(self.frame_index_at(t_ms))


@dataclass(frozen=True)
class Fixation:
    start: float
    end: float
    centroid_x: float
    centroid_y: float
    depth: float | None
    sample_range: tuple[int, int]  # inclusive first, exclusive last

    @property
    def duration(self) -> float:
        return self.end - self.start

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.start + self.end)


# ---------------------------------------------------------------- file format

def _parse_meta(path: Path) -> dict[str, str]:
    meta = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        if "=" not in line:
            raise RecordingLoadError(f"{path.name}: line {lineno} is not key=value: {line!r}")
        key, value = line.split("=", 1)
        meta[key.strip()] = value.strip()
    missing = [k for k in META_KEYS if k not in meta]
    if missing:
        raise RecordingLoadError(f"{path.name}: missing keys {', '.join(missing)}")
    return meta


def intrinsics_from_meta(meta: dict[str, str]) -> CameraIntrinsics:
    try:
        return CameraIntrinsics.from_degrees(float(meta["h_fov_deg"]), float(meta["v_fov_deg"]),
                                             int(meta["res_x"]), int(meta["res_y"]))
    except (KeyError, ValueError) as exc:
        raise RecordingLoadError(f"recording.meta: bad camera parameters ({exc})") from exc


def _parse_valid(token: str) -> bool:
    token = token.strip().lower()
    if token in ("1", "true"):
        return True
    if token in ("0", "false"):
        return False
    raise ValueError(f"valid must be 0/1, got {token!r}")


def load_recording(path) -> GazeRecording:
    """Read and validate a recording directory.

    Rows that are well-formed but physically implausible (negative depth,
    gaze outside the frame) are kept with ``valid=False``. Structural
    problems raise :class:`RecordingLoadError` naming every offending row.
    """
    root = Path(path)
    if root.is_file():
        root = root.parent
    for name in ("recording.meta", "gaze.csv", "frames.csv"):
        if not (root / name).is_file():
            raise RecordingLoadError(f"{root}: missing {name}")
    meta = _parse_meta(root / "recording.meta")
    intr = intrinsics_from_meta(meta)

    lines = (root / "gaze.csv").read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != GAZE_HEADER:
        raise RecordingLoadError(f"gaze.csv: expected header {GAZE_HEADER!r}")
    t, x, y, depth, valid = [], [], [], [], []
    malformed, flagged = [], []
    for row, line in enumerate(lines[1:], 1):
        parts = line.split(",")
        try:
            if len(parts) != 5:
                raise ValueError(f"expected 5 fields, got {len(parts)}")
            ti, xi, yi = float(parts[0]), float(parts[1]), float(parts[2])
            di = float(parts[3]) if parts[3].strip() else math.nan
            vi = _parse_valid(parts[4])
            if not math.isfinite(ti):
                raise ValueError("non-finite timestamp")
        except ValueError as exc:
            malformed.append(f"row {row} (line {row + 1}): {exc}")
            continue
        if vi and not (math.isnan(di) or di > 0.0):
            vi = False
            flagged.append(f"row {row}: depth {parts[3]} <= 0")
        if vi and not (0.0 <= xi < intr.res_x and 0.0 <= yi < intr.res_y):
            vi = False
            flagged.append(f"row {row}: gaze ({parts[1]}, {parts[2]}) outside frame")
        t.append(ti)
        x.append(xi)
        y.append(yi)
        depth.append(di)
        valid.append(vi)
    if malformed:
        raise RecordingLoadError("gaze.csv: malformed rows: " + "; ".join(malformed))
    if not t:
        raise RecordingLoadError("gaze.csv: no samples")
    decreasing = [i + 1 for i in range(1, len(t)) if t[i] < t[i - 1]]
    if decreasing:
        rows = ", ".join(f"row {r}" for r in decreasing)
        raise RecordingLoadError(f"gaze.csv: timestamps decrease at {rows}")
    if flagged:
        warnings.warn("gaze.csv: samples flagged invalid: " + "; ".join(flagged), stacklevel=2)

    flines = (root / "frames.csv").read_text(encoding="utf-8").splitlines()
    if not flines or flines[0].strip() != FRAMES_HEADER:
        raise RecordingLoadError(f"frames.csv: expected header {FRAMES_HEADER!r}")
    ftimes, ffiles, problems = [], [], []
    for row, line in enumerate(flines[1:], 1):
        parts = line.split(",")
        if len(parts) != 2:
            problems.append(f"row {row}: expected 2 fields")
            continue
        try:
            ft = float(parts[0])
        except ValueError:
            problems.append(f"row {row}: bad timestamp {parts[0]!r}")
            continue
        name = parts[1].strip()
        if not (root / name).is_file():
            problems.append(f"row {row}: missing frame {name}")
        if ftimes and ft < ftimes[-1]:
            problems.append(f"row {row}: timestamps decrease")
        ftimes.append(ft)
        ffiles.append(name)
    if problems:
        raise RecordingLoadError("frames.csv: " + "; ".join(problems))
    if not ftimes:
        raise RecordingLoadError("frames.csv: no frames")
    if ftimes[0] > t[0]:
        raise RecordingLoadError(
            f"frames.csv: first frame at {ftimes[0]} ms is after first sample at {t[0]} ms")

    return GazeRecording(intr, t, x, y, depth, valid, ftimes, ffiles, meta, root=root)


def save_recording(rec: GazeRecording, path) -> Path:
    """Write ``rec`` in the directory format understood by :func:`load_recording`."""
    root = Path(path)
    (root / "frames").mkdir(parents=True, exist_ok=True)
    meta = dict(rec.meta)
    lines = [f"{k}={meta.pop(k)}" for k in META_KEYS if k in meta]
    lines += [f"{k}={v}" for k, v in sorted(meta.items())]
    (root / "recording.meta").write_text("\n".join(lines) + "\n", encoding="utf-8")

    rows = [GAZE_HEADER]
    for t, x, y, d, v in zip(rec.t, rec.x, rec.y, rec.depth, rec.valid):
        rows.append(",".join([_fmt(t), _fmt(x), _fmt(y), "" if math.isnan(d) else _fmt(d),
                              "1" if v else "0"]))
    (root / "gaze.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")

    written = set()
    frows = [FRAMES_HEADER]
    for index, (ft, name) in enumerate(zip(rec.frame_times, rec.frame_files)):
        frows.append(f"{_fmt(ft)},{name}")
        if name in written:
            continue
        written.add(name)
        target = root / name
        if rec.root is not None and (rec.root / name).resolve() == target.resolve():
            continue
        target.parent.mkdir(parents=True, exist_ok=True)
        Image.fromarray(np.ascontiguousarray(rec.frame(index))).save(target)
    (root / "frames.csv").write_text("\n".join(frows) + "\n", encoding="utf-8")
    return root


# ------------------------------------------------------------ fixation depth

def fixation_depth(samples: Iterable) -> float:
    """Lower median of the present depth values.

    Accepts :class:`GazeSample` objects or plain numbers; ``None``/NaN count
    as missing.
    """
    values = []
    for s in samples:
        d = s.depth if isinstance(s, GazeSample) else s
        if d is not None and not math.isnan(d):
            values.append(float(d))
    if not values:
        raise MissingDepthError("no depth values present; skip or flag this fixation")
    values.sort()
    return values[(len(values) - 1) // 2]


# -------------------------------------------------------------------- I-DT

def _dispersion_deg(intr: CameraIntrinsics, xs: np.ndarray, ys: np.ndarray) -> float:
    return (intr.pixels_to_degrees_x(float(xs.max() - xs.min()))
            + intr.pixels_to_degrees_y(float(ys.max() - ys.min())))


def _valid_runs(valid: np.ndarray):
    n = len(valid)
    i = 0
    while i < n:
        if not valid[i]:
            i += 1
            continue
        j = i
        while j < n and valid[j]:
            j += 1
        yield i, j
        i = j


def detect_fixations(rec: GazeRecording, dispersion_max: float = 1.0,
                     min_duration: float = 100.0) -> list[Fixation]:
    """Dispersion-threshold (I-DT) fixation identification.

    Dispersion is ``(max_x - min_x) + (max_y - min_y)`` with each span
    converted to degrees of visual angle. Invalid samples end a window.
    """
    if not dispersion_max > 0:
        raise ValueError(f"dispersion_max must be positive, got {dispersion_max!r}")
    if not min_duration > 0:
        raise ValueError(f"min_duration must be positive, got {min_duration!r}")
    intr = rec.intrinsics
    t, x, y = rec.t, rec.x, rec.y
    fixations = []
    for lo, hi in _valid_runs(rec.valid):
        i = lo
        while i < hi:
            j = int(np.searchsorted(t[i:hi], t[i] + min_duration, side="left")) + i
            if j >= hi:
                break
            if _dispersion_deg(intr, x[i:j + 1], y[i:j + 1]) > dispersion_max:
                i += 1
                continue
            x_lo, x_hi = x[i:j + 1].min(), x[i:j + 1].max()
            y_lo, y_hi = y[i:j + 1].min(), y[i:j + 1].max()
            while j + 1 < hi:
                nx_lo, nx_hi = min(x_lo, x[j + 1]), max(x_hi, x[j + 1])
                ny_lo, ny_hi = min(y_lo, y[j + 1]), max(y_hi, y[j + 1])
                d = (intr.pixels_to_degrees_x(nx_hi - nx_lo)
                     + intr.pixels_to_degrees_y(ny_hi - ny_lo))
                if d > dispersion_max:
                    break
                x_lo, x_hi, y_lo, y_hi = nx_lo, nx_hi, ny_lo, ny_hi
                j += 1
            depths = rec.depth[i:j + 1]
            try:
                depth = fixation_depth(depths)
            except MissingDepthError:
                depth = None
            fixations.append(Fixation(
                start=float(t[i]), end=float(t[j]),
                centroid_x=float(x[i:j + 1].mean()), centroid_y=float(y[i:j + 1].mean()),
                depth=depth, sample_range=(i, j + 1)))
            i = j + 1
    return fixations


class FixationDetector(ClusterMixin, BaseEstimator):
    """I-DT as a clusterer: ``labels_[i]`` is the fixation index of sample
    ``i`` or -1 for samples outside any fixation.

    ``fit`` takes a :class:`GazeRecording`, or an array with columns
    ``t_ms, x_px, y_px[, depth_m[, valid]]`` together with ``intrinsics``.
    """

    def __init__(self, dispersion_max=1.0, min_duration=100.0, intrinsics=None):
        self.dispersion_max = dispersion_max
        self.min_duration = min_duration
        self.intrinsics = intrinsics

    def _as_recording(self, X) -> GazeRecording:
        if isinstance(X, GazeRecording):
            return X
        if self.intrinsics is None:
            raise ValueError("array input needs the intrinsics parameter")
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] < 3:
            raise ValueError(f"expected (n_samples, >=3) array, got shape {X.shape}")
        n = len(X)
        depth = X[:, 3] if X.shape[1] > 3 else np.full(n, np.nan)
        valid = X[:, 4].astype(bool) if X.shape[1] > 4 else np.ones(n, bool)
        return GazeRecording(self.intrinsics, X[:, 0], X[:, 1], X[:, 2], depth, valid,
                             [X[0, 0] if n else 0.0], ["<none>"], {})

    def fit(self, X, y=None):
        rec = self._as_recording(X)
        self.fixations_ = detect_fixations(rec, self.dispersion_max, self.min_duration)
        labels = np.full(len(rec), -1, dtype=int)
        for k, f in enumerate(self.fixations_):
            labels[f.sample_range[0]:f.sample_range[1]] = k
        self.labels_ = labels
        return self
