import numpy as np
import pytest

from gazedepth.geometry import PatchMode
from gazedepth.patches import Patch
from gazedepth.projection import gridify
from gazedepth.render import BACKGROUND, MARGIN, render_gaze_stripes, render_projection_grid, save_png

TILE = 64


def patch(k, start=None, dur=200.0, px=TILE):
    # solid colour unique to k so tiles can be located afterwards
    colour = ((37 * k + 11) % 256, (91 * k + 5) % 256, (53 * k + 200) % 256)
    start = 250.0 * k if start is None else start
    return Patch(np.full((px, px, 3), colour, np.uint8), k, (0, 0, px, px), PatchMode.CLASSIC, 0.0,
                 start, start + dur, (0.0, 0.0), 1.0, {})


def count_tiles(raster, tile_colour):
    hits = np.all(raster == tile_colour, axis=2)
    return int(hits.sum()) // (TILE * TILE)


def test_single_recording_layout():
    img = render_gaze_stripes([("rec1", [patch(k) for k in range(5)])], TILE)
    h, w = img.raster.shape[:2]
    assert w >= 5 * TILE and h >= TILE
    assert img.rows == ["rec1"]
    for k in range(5):
        assert count_tiles(img.raster, patch(k).pixels[0, 0]) == 1


def test_tiles_follow_start_time_order():
    ps = [patch(k) for k in range(4)]
    img = render_gaze_stripes([("r", list(reversed(ps)))], TILE)
    cols = img.columns[0]
    assert cols == sorted(cols) and len(set(cols)) == 4


def test_gap_between_fixations_stays_visible():
    ps = [patch(0, 0.0), patch(1, 200.0), patch(2, 1000.0)]
    img = render_gaze_stripes([("r", ps)], TILE, bin_ms=200.0)
    assert img.columns[0] == [0, 1, 5]


def test_colliding_starts_shift_right():
    ps = [patch(0, 0.0), patch(1, 10.0), patch(2, 20.0)]
    img = render_gaze_stripes([("r", ps)], TILE, bin_ms=200.0)
    assert img.columns[0] == [0, 1, 2]


def test_two_recordings_two_rows():
    img = render_gaze_stripes([("a", [patch(0), patch(1)]), ("b", [patch(2)])], TILE)
    assert img.rows == ["a", "b"]
    ys = []
    for k in range(3):
        yy, _ = np.nonzero(np.all(img.raster == patch(k).pixels[0, 0], axis=2))
        ys.append(yy.min())
    assert ys[0] == ys[1] and ys[2] - ys[0] == TILE


def test_all_empty_sequences_raise():
    with pytest.raises(ValueError):
        render_gaze_stripes([("a", []), ("b", [])])
    with pytest.raises(ValueError):
        render_gaze_stripes([])


def test_empty_row_is_allowed_alongside_others():
    img = render_gaze_stripes([("a", []), ("b", [patch(0)])], TILE)
    assert img.rows == ["a", "b"]


def test_tiles_are_resized_to_tile_size():
    img = render_gaze_stripes([("r", [patch(3, px=16)])], 32)
    hits = np.all(img.raster == patch(3).pixels[0, 0], axis=2)
    assert hits.sum() == 32 * 32


# -------------------------------------------------------------- projection

def _layout(n, rows=2, cols=2, seed=0):
    return gridify(np.random.default_rng(seed).normal(size=(n, 2)), rows, cols)


def test_grid_four_patches_each_once():
    ps = [patch(k) for k in range(4)]
    raster = render_projection_grid(_layout(4), ps, TILE)
    for p in ps:
        assert count_tiles(raster, p.pixels[0, 0]) == 1


def test_grid_three_patches_one_background_cell():
    layout = _layout(3)
    raster = render_projection_grid(layout, [patch(k) for k in range(3)], TILE)
    used = {layout.cell_of(i) for i in range(3)}
    (r, c), = {(r, c) for r in range(2) for c in range(2)} - used
    y, x = MARGIN + r * TILE, MARGIN + c * TILE
    assert (raster[y:y + TILE, x:x + TILE] == BACKGROUND).all()


@pytest.mark.parametrize("rows,cols,tile", [(2, 2, 64), (3, 5, 16), (1, 1, 8)])
def test_grid_dimensions(rows, cols, tile):
    layout = _layout(1, rows, cols)
    raster = render_projection_grid(layout, [patch(0)], tile)
    assert raster.shape == (rows * tile + 2 * MARGIN, cols * tile + 2 * MARGIN, 3)


def test_grid_count_mismatch_raises():
    with pytest.raises(ValueError, match="patches"):
        render_projection_grid(_layout(3), [patch(0), patch(1)], TILE)


# ---------------------------------------------------------------------- io

def test_png_is_bit_identical_and_has_sidecar(tmp_path):
    seqs = [("P1", [patch(k) for k in range(3)])]
    a = save_png(render_gaze_stripes(seqs), tmp_path / "a.png", {"mode": "classic", "seed": 4})
    b = save_png(render_gaze_stripes(seqs), tmp_path / "b.png", {"mode": "classic", "seed": 4})
    assert a.read_bytes() == b.read_bytes()
    meta = dict(ln.split("=", 1) for ln in (tmp_path / "a.png.meta").read_text().splitlines())
    assert meta["mode"] == "classic" and meta["seed"] == "4"
    assert meta["kind"] == "gaze_stripes" and "bin_ms" in meta


def test_png_round_trips_pixels(tmp_path):
    from PIL import Image
    raster = render_projection_grid(_layout(4), [patch(k) for k in range(4)], 16)
    save_png(raster, tmp_path / "g.png")
    assert np.array_equal(np.asarray(Image.open(tmp_path / "g.png")), raster)
