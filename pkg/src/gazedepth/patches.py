"""Cropping gaze thumbnails around fixations."""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image
from sklearn.base import BaseEstimator, TransformerMixin

from ._parallel import ordered_map
from .geometry import PatchMode, PatchSizePx, PatchSpec
from .recording import Fixation, GazeRecording


class SkippedFixationWarning(UserWarning):
    """A fixation produced no patch (missing depth in adaptive mode)."""


@dataclass(eq=False)
class Patch:
    pixels: np.ndarray  # (canonical_px, canonical_px, 3) uint8
    fixation_id: int
    crop_rect: tuple[int, int, int, int]  # x0, y0, w, h in source-frame pixels
    mode: PatchMode
    pad_fraction: float
    start_ms: float = 0.0
    end_ms: float = 0.0
    gaze: tuple[float, float] = (0.0, 0.0)
    depth: float | None = None
    meta: dict = field(default_factory=dict)

    @property
    def canonical_px(self) -> int:
        return self.pixels.shape[0]


def _resize_bilinear(raster: np.ndarray, size: int) -> np.ndarray:
    # Pillow's bilinear filter widens its support when shrinking, so large
    # crops are low-passed instead of aliased.
    im = Image.fromarray(np.ascontiguousarray(raster))
    return np.asarray(im.resize((size, size), Image.Resampling.BILINEAR))


def crop_rect_for(gaze: tuple[float, float], size: PatchSizePx) -> tuple[int, int, int, int]:
    """Integer crop rectangle that puts the gazed pixel at the crop centre."""
    gx, gy = math.floor(gaze[0]), math.floor(gaze[1])
    return gx - size.width // 2, gy - size.height // 2, size.width, size.height


def extract_patch(frame: np.ndarray, gaze: tuple[float, float], size: PatchSizePx,
                  canonical_px: int = 64, **extra) -> Patch:
    """Crop ``size`` around ``gaze`` (edge-replicating past the border) and
    resize the crop to ``canonical_px`` squared."""
    frame = np.asarray(frame)
    if frame.ndim == 2:
        frame = np.repeat(frame[:, :, None], 3, axis=2)
    h_img, w_img = frame.shape[:2]
    gx, gy = gaze
    if not (0.0 <= gx < w_img and 0.0 <= gy < h_img):
        raise ValueError(f"gaze ({gx}, {gy}) outside {w_img}x{h_img} frame")
    x0, y0, w, h = crop_rect_for(gaze, size)
    cols = np.arange(x0, x0 + w)
    rows = np.arange(y0, y0 + h)
    inside_x = np.count_nonzero((cols >= 0) & (cols < w_img))
    inside_y = np.count_nonzero((rows >= 0) & (rows < h_img))
    pad_fraction = 1.0 - (inside_x * inside_y) / float(w * h)
    crop = frame[np.clip(rows, 0, h_img - 1)[:, None], np.clip(cols, 0, w_img - 1)[None, :]]
    pixels = _resize_bilinear(crop.astype(np.uint8), canonical_px)
    return Patch(pixels=pixels, crop_rect=(x0, y0, w, h), pad_fraction=pad_fraction,
                 gaze=(float(gx), float(gy)),
                 fixation_id=extra.pop("fixation_id", 0),
                 mode=extra.pop("mode", PatchMode.CLASSIC), **extra)


def extract_scanpath_patches(rec: GazeRecording, fixes: list[Fixation],
                             spec: PatchSpec) -> list[Patch]:
    """One thumbnail per fixation, taken from the frame at the fixation midpoint.

    In adaptive mode fixations without depth are skipped with a warning; the
    remaining patches keep their original ``fixation_id``.
    """
    intr = rec.intrinsics
    todo = []
    for k, fx in enumerate(fixes):
        if spec.mode is PatchMode.DEPTH_ADAPTIVE and fx.depth is None:
            warnings.warn(f"fixation {k} has no depth; skipped in adaptive mode",
                          SkippedFixationWarning, stacklevel=2)
            continue
        todo.append((k, fx))

    def one(item):
        k, fx = item
        size = spec.size_for(intr, fx.depth)
        return extract_patch(rec.frame_at(fx.midpoint), (fx.centroid_x, fx.centroid_y), size,
                             spec.canonical_px, fixation_id=k, mode=spec.mode,
                             start_ms=fx.start, end_ms=fx.end, depth=fx.depth)

    return ordered_map(one, todo)


class ThumbnailExtractor(TransformerMixin, BaseEstimator):
    """Stateless transformer from ``(recording, fixations)`` pairs to patch lists.

    Either give ``preset`` (small/mid/large) or the explicit ``theta``
    (radians, classic) / ``actual_length`` (meters, adaptive).
    """

    def __init__(self, mode="classic", preset="mid", theta=None, actual_length=None,
                 canonical_px=64):
        self.mode = mode
        self.preset = preset
        self.theta = theta
        self.actual_length = actual_length
        self.canonical_px = canonical_px

    def patch_spec(self) -> PatchSpec:
        mode = PatchMode.parse(self.mode)
        if self.theta is not None or self.actual_length is not None:
            return PatchSpec(mode, theta=self.theta, actual_length=self.actual_length,
                             canonical_px=self.canonical_px)
        return PatchSpec.from_preset(self.preset, mode, self.canonical_px)

    def fit(self, X=None, y=None):
        self.spec_ = self.patch_spec()
        return self

    def transform(self, X):
        spec = getattr(self, "spec_", None) or self.patch_spec()
        return [extract_scanpath_patches(rec, fixes, spec) for rec, fixes in X]


# ------------------------------------------------------------------ dump/load

PATCH_FIELDS = ("index", "fixation_id", "start_ms", "end_ms", "x0", "y0", "w", "h", "mode",
                "pad_fraction", "gaze_x", "gaze_y", "depth_m", "file")


def save_patches(patches: list[Patch], directory) -> Path:
    """Write ``%04d_<mode>.png`` thumbnails plus a ``patches.csv`` index."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / "patches.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PATCH_FIELDS)
        for i, p in enumerate(patches):
            name = f"{i:04d}_{p.mode.tag}.png"
            Image.fromarray(p.pixels).save(directory / name)
            x0, y0, w, h = p.crop_rect
            writer.writerow([i, p.fixation_id, repr(p.start_ms), repr(p.end_ms), x0, y0, w, h,
                             p.mode.tag, repr(p.pad_fraction), repr(p.gaze[0]), repr(p.gaze[1]),
                             "" if p.depth is None else repr(p.depth), name])
    return directory


def load_patches(directory) -> list[Patch]:
    directory = Path(directory)
    patches = []
    with open(directory / "patches.csv", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            with Image.open(directory / row["file"]) as im:
                pixels = np.asarray(im.convert("RGB"))
            patches.append(Patch(
                pixels=pixels, fixation_id=int(row["fixation_id"]),
                crop_rect=(int(row["x0"]), int(row["y0"]), int(row["w"]), int(row["h"])),
                mode=PatchMode.parse(row["mode"]), pad_fraction=float(row["pad_fraction"]),
                start_ms=float(row["start_ms"]), end_ms=float(row["end_ms"]),
                gaze=(float(row["gaze_x"]), float(row["gaze_y"])),
                depth=float(row["depth_m"]) if row["depth_m"] else None))
    return patches
