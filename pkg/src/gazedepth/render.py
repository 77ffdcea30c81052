"""Raster views of patch sequences: Gaze Stripes and the gridded projection."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw, ImageFont

from .patches import Patch, _resize_bilinear
from .projection import GridLayout

BACKGROUND = (128, 128, 128)
STRIPE_BACKGROUND = (255, 255, 255)
INK = (0, 0, 0)
MARGIN = 8
CHAR_W, CHAR_H = 6, 11  # cell size of Pillow's built-in bitmap font
AXIS_H = 24


@dataclass
class StripeImage:
    raster: np.ndarray
    rows: list[str]
    tile_px: int
    bin_ms: float
    t0_ms: float
    columns: list[list[int]]  # per row, the column of each tile in temporal order
    meta: dict = field(default_factory=dict)


def _font():
    # the bitmap font renders identically on every install
    return ImageFont.load_default_imagefont()


def _tile(patch: Patch, tile_px: int) -> np.ndarray:
    px = np.asarray(patch.pixels)
    if px.ndim == 2:
        px = np.repeat(px[:, :, None], 3, axis=2)
    if px.shape[0] == tile_px and px.shape[1] == tile_px:
        return px
    return _resize_bilinear(px, tile_px)


def _columns(starts: list[float], t0: float, bin_ms: float) -> list[int]:
    cols, next_free = [], 0
    for s in starts:
        c = max(int(math.floor((s - t0) / bin_ms)), next_free)
        cols.append(c)
        next_free = c + 1
    return cols


def render_gaze_stripes(patch_sequences, tile_px: int = 64, bin_ms: float | None = None) -> StripeImage:
    """One row per recording, tiles placed on a shared time axis.

    A tile goes to column ``floor((start - t0) / bin_ms)``; when that column
    is taken it moves right to the next free one. Empty columns stay
    background so gaps between fixations remain visible. ``bin_ms`` defaults
    to the median fixation duration over all inputs.
    """
    seqs = [(str(rid), sorted(ps, key=lambda p: (p.start_ms, p.fixation_id)))
            for rid, ps in patch_sequences]
    if tile_px < 1:
        raise ValueError(f"tile_px must be positive, got {tile_px}")
    if not seqs or all(not ps for _, ps in seqs):
        raise ValueError("render_gaze_stripes needs at least one non-empty sequence")
    everything = [p for _, ps in seqs for p in ps]
    t0 = min(p.start_ms for p in everything)
    if bin_ms is None:
        durations = [p.end_ms - p.start_ms for p in everything]
        bin_ms = float(np.median(durations)) if max(durations) > 0 else 1.0
        bin_ms = max(bin_ms, 1.0)
    elif bin_ms <= 0:
        raise ValueError(f"bin_ms must be positive, got {bin_ms}")

    columns = [_columns([p.start_ms for p in ps], t0, bin_ms) for _, ps in seqs]
    n_cols = max((c[-1] + 1 for c in columns if c), default=1)
    label_w = MARGIN + CHAR_W * max(len(rid) for rid, _ in seqs) + MARGIN
    width = label_w + n_cols * tile_px + CHAR_W * 8  # room for the last tick label
    height = MARGIN + len(seqs) * tile_px + AXIS_H
    canvas = np.full((height, width, 3), STRIPE_BACKGROUND, dtype=np.uint8)
    for r, ((_, ps), cols) in enumerate(zip(seqs, columns)):
        y = MARGIN + r * tile_px
        for p, c in zip(ps, cols):
            x = label_w + c * tile_px
            canvas[y:y + tile_px, x:x + tile_px] = _tile(p, tile_px)

    im = Image.fromarray(canvas)
    draw = ImageDraw.Draw(im)
    font = _font()
    for r, (rid, _) in enumerate(seqs):
        draw.text((MARGIN, MARGIN + r * tile_px + (tile_px - CHAR_H) // 2), rid, fill=INK, font=font)
    axis_y = MARGIN + len(seqs) * tile_px + 2
    draw.line([(label_w, axis_y), (label_w + n_cols * tile_px - 1, axis_y)], fill=INK)
    # label every k-th column so tick texts never overlap
    step = max(1, math.ceil((CHAR_W * 7) / tile_px))
    for c in range(0, n_cols + 1, step):
        x = label_w + c * tile_px
        draw.line([(x, axis_y), (x, axis_y + 4)], fill=INK)
        draw.text((x + 1, axis_y + 6), f"{int(round(c * bin_ms))}ms", fill=INK, font=font)

    meta = {"kind": "gaze_stripes", "tile_px": str(tile_px), "bin_ms": repr(float(bin_ms)),
            "t0_ms": repr(float(t0)), "binning": "floor((start-t0)/bin_ms), collisions shift right",
            "rows": ";".join(rid for rid, _ in seqs)}
    return StripeImage(np.asarray(im), [rid for rid, _ in seqs], tile_px, float(bin_ms),
                       float(t0), columns, meta)


def render_projection_grid(layout: GridLayout, patches, tile_px: int = 64) -> np.ndarray:
    """Tiles at their assigned cells inside a fixed margin; empty cells stay gray."""
    patches = list(patches)
    if len(patches) != len(layout.assignment):
        raise ValueError(f"layout places {len(layout.assignment)} points but {len(patches)} patches given")
    height = layout.rows * tile_px + 2 * MARGIN
    width = layout.cols * tile_px + 2 * MARGIN
    canvas = np.full((height, width, 3), BACKGROUND, dtype=np.uint8)
    for p, (r, c) in zip(patches, layout.assignment):
        y, x = MARGIN + int(r) * tile_px, MARGIN + int(c) * tile_px
        canvas[y:y + tile_px, x:x + tile_px] = _tile(p, tile_px)
    return canvas


def save_png(raster, path, meta: dict | None = None) -> Path:
    """Write ``raster`` as PNG plus a ``<name>.meta`` key=value sidecar."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(raster, StripeImage):
        meta = {**raster.meta, **(meta or {})}
        raster = raster.raster
    Image.fromarray(np.ascontiguousarray(raster, dtype=np.uint8)).save(path, format="PNG")
    lines = [f"{k}={v}" for k, v in sorted((meta or {}).items())]
    path.with_name(path.name + ".meta").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
