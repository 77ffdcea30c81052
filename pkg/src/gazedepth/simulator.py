"""Synthetic tabletop benchmark.

Six textured boxes stand in a row on a table in front of a wall. A pinhole
camera (the head) stands at a fixed distance and turns toward each object
while a simulated eye fixates a point on it. Frames are rendered by ray
casting, so the gaze depth and the picture come from the same geometry.

World frame: x to the right, y up, z away from the viewer. The front row
of objects has its front faces at ``z = 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ._parallel import ordered_map
from ._seeding import derive_seed
from .geometry import CameraIntrinsics
from .recording import GazeRecording, Fixation, save_recording

OBJECT_ORDER = ("V1", "R1", "R2", "V2", "R3", "V3")
DEPTH_LEVELS = (0.5, 1.5, 3.0)
BACKGROUND_ID = -1


def default_intrinsics(res_x: int = 640, res_y: int = 480) -> CameraIntrinsics:
    """64 degree horizontal field of view with square pixels."""
    h = math.radians(64.0)
    v = 2.0 * math.atan(math.tan(h / 2.0) * res_y / res_x)
    return CameraIntrinsics(h, v, res_x, res_y)


# ---------------------------------------------------------------- scene model

@dataclass(frozen=True)
class SceneObject:
    id: str
    center: tuple[float, float, float]
    extent: tuple[float, float, float]  # full width, height, depth in meters
    texture: str
    porosity: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.porosity < 1.0:
            raise ValueError(f"{self.id}: porosity must lie in [0, 1), got {self.porosity}")
        if min(self.extent) <= 0:
            raise ValueError(f"{self.id}: extent must be positive, got {self.extent}")

    @property
    def lo(self) -> np.ndarray:
        return np.asarray(self.center) - np.asarray(self.extent) / 2.0

    @property
    def hi(self) -> np.ndarray:
        return np.asarray(self.center) + np.asarray(self.extent) / 2.0

    def overlaps(self, other: "SceneObject") -> bool:
        return bool(np.all(self.lo < other.hi) and np.all(other.lo < self.hi))


@dataclass(frozen=True)
class SceneSpec:
    objects: tuple[SceneObject, ...]
    props: tuple[SceneObject, ...]
    camera_height: float = 0.10
    porosity_cell: float = 0.002

    def __post_init__(self):
        for i, a in enumerate(self.objects):
            for b in self.objects[i + 1:]:
                if a.overlaps(b):
                    raise ValueError(f"objects {a.id} and {b.id} overlap")

    @property
    def boxes(self) -> tuple[SceneObject, ...]:
        return self.objects + self.props

    def object(self, oid: str) -> SceneObject:
        for obj in self.objects:
            if obj.id == oid:
                return obj
        raise KeyError(oid)

    def index(self, oid: str) -> int:
        return [o.id for o in self.objects].index(oid)


def build_benchmark_scene(scale: float = 1.0) -> SceneSpec:
    """Default scene: V1 R1 R2 V2 R3 V3 left to right, alternating front/back row.

    V1 (the potted-plant analog) is porous so some gaze rays pass through
    it to the wall behind. ``scale`` multiplies object sizes and spacing.
    """
    spacing = 0.14 * scale
    depth = 0.08 * scale
    back_offset = 0.12 * scale
    heights = {"V1": 0.20, "R1": 0.18, "R2": 0.24, "V2": 0.16, "R3": 0.14, "V3": 0.20}
    widths = {"V1": 0.11, "R1": 0.10, "R2": 0.11, "V2": 0.10, "R3": 0.12, "V3": 0.09}
    objects = []
    for i, oid in enumerate(OBJECT_ORDER):
        x = (i - 2.5) * spacing
        z_front = 0.0 if i % 2 == 0 else back_offset
        h = heights[oid] * scale
        objects.append(SceneObject(
            oid, (x, h / 2.0, z_front + depth / 2.0), (widths[oid] * scale, h, depth),
            texture=oid.lower(), porosity=0.4 if oid == "V1" else 0.0))
    wall_z = 0.9 + 0.3 * scale
    props = (
        SceneObject("table", (0.0, -0.375, wall_z / 2 - 0.15), (20.0, 0.75, wall_z + 0.3), texture="table"),
        SceneObject("wall", (0.0, 1.0, wall_z + 0.025), (40.0, 6.0, 0.05), texture="wall"),
        SceneObject("floor", (0.0, -0.775, -2.0), (40.0, 0.05, 6.0), texture="floor"),
    )
    return SceneSpec(tuple(objects), props, camera_height=0.10 * scale)


def scene_from_config(text: str, base: SceneSpec | None = None) -> SceneSpec:
    """Override a scene from ``key=value`` lines, e.g. ``V1.porosity=0.3`` or
    ``R2.center=-0.07,0.12,0.04``; ``camera_height`` and ``porosity_cell`` too."""
    scene = base or build_benchmark_scene()
    objects = {o.id: o for o in scene.objects}
    top = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if "." in key:
            oid, attr = key.split(".", 1)
            if oid not in objects:
                raise ValueError(f"unknown object {oid!r} in scene config")
            if attr in ("center", "extent"):
                parsed = tuple(float(v) for v in value.split(","))
                if len(parsed) != 3:
                    raise ValueError(f"{key} needs three comma-separated numbers")
            elif attr == "porosity":
                parsed = float(value)
            elif attr == "texture":
                parsed = value
            else:
                raise ValueError(f"unknown object attribute {attr!r}")
            objects[oid] = replace(objects[oid], **{attr: parsed})
        elif key in ("camera_height", "porosity_cell"):
            top[key] = float(value)
        else:
            raise ValueError(f"unknown scene key {key!r}")
    return replace(scene, objects=tuple(objects[o.id] for o in scene.objects), **top)


# -------------------------------------------------------------------- camera

@dataclass(frozen=True)
class CameraPose:
    position: tuple[float, float, float]
    yaw: float = 0.0  # radians, positive turns toward +x
    pitch: float = 0.0  # radians, positive looks up

    @classmethod
    def look_at(cls, position, target) -> "CameraPose":
        d = np.asarray(target, float) - np.asarray(position, float)
        yaw = math.atan2(d[0], d[2])
        pitch = math.atan2(d[1], math.hypot(d[0], d[2]))
        return cls(tuple(float(v) for v in position), yaw, pitch)

    def basis(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Right, up and forward unit vectors in world coordinates."""
        cy, sy = math.cos(self.yaw), math.sin(self.yaw)
        cp, sp = math.cos(self.pitch), math.sin(self.pitch)
        forward = np.array([sy * cp, sp, cy * cp])
        right = np.array([cy, 0.0, -sy])
        up = np.cross(forward, right)
        return right, up, forward

    def rays(self, intr: CameraIntrinsics, xs, ys) -> np.ndarray:
        """Unit world directions through continuous pixel coordinates."""
        right, up, forward = self.basis()
        xs = np.asarray(xs, float)
        ys = np.asarray(ys, float)
        a = (xs - intr.res_x / 2.0) / intr.focal_x
        b = -(ys - intr.res_y / 2.0) / intr.focal_y
        d = a[..., None] * right + b[..., None] * up + forward
        return d / np.linalg.norm(d, axis=-1, keepdims=True)

    def project(self, intr: CameraIntrinsics, point) -> tuple[float, float]:
        right, up, forward = self.basis()
        v = np.asarray(point, float) - np.asarray(self.position)
        zc = float(v @ forward)
        if zc <= 0:
            raise ValueError("point is behind the camera")
        return (intr.res_x / 2.0 + intr.focal_x * float(v @ right) / zc,
                intr.res_y / 2.0 - intr.focal_y * float(v @ up) / zc)


# ------------------------------------------------------------- ray casting

_M1 = np.uint64(0x9E3779B97F4A7C15)
_M2 = np.uint64(0xC2B2AE3D27D4EB4F)
_M3 = np.uint64(0x165667B19E3779F9)
_M4 = np.uint64(0xBF58476D1CE4E5B9)
_M5 = np.uint64(0x94D049BB133111EB)


def cell_hash(obj_index, face, iu, iv) -> np.ndarray:
    """Uniform [0, 1) value per (object, face, cell); a pure function."""
    with np.errstate(over="ignore"):
        h = (np.asarray(iu, np.int64).astype(np.uint64) * _M1
             ^ np.asarray(iv, np.int64).astype(np.uint64) * _M2
             ^ np.uint64(int(obj_index) * 64 + int(face) + 1) * _M3)
        h = h ^ (h >> np.uint64(30))
        h = h * _M4
        h = h ^ (h >> np.uint64(27))
        h = h * _M5
        h = h ^ (h >> np.uint64(31))
    return (h >> np.uint64(11)).astype(np.float64) / float(2 ** 53)


def _face_uv(axis, point, lo):
    """Face-local coordinates (meters) of hit points; u horizontal, v vertical
    for vertical faces, (x, z) on horizontal faces."""
    rel = point - lo
    u = np.where(axis == 0, rel[:, 2], rel[:, 0])
    v = np.where(axis == 1, rel[:, 2], rel[:, 1])
    return u, v


@dataclass
class _Hits:
    t: np.ndarray
    box: np.ndarray
    axis: np.ndarray
    face: np.ndarray
    u: np.ndarray
    v: np.ndarray


def trace(scene: SceneSpec, origin, dirs: np.ndarray, ignore_porosity: bool = False) -> _Hits:
    """Nearest intersection of each ray with the scene's boxes.

    ``box`` indexes ``scene.boxes`` (-1 for a miss). A ray entering a porous
    object through a void cell passes through that object entirely.
    """
    origin = np.asarray(origin, float)
    dirs = np.array(dirs, float).reshape(-1, 3)
    dirs[dirs == 0.0] = 1e-12
    inv = 1.0 / dirs
    n = dirs.shape[0]
    best_t = np.full(n, np.inf)
    best_box = np.full(n, -1, dtype=int)
    best_axis = np.zeros(n, dtype=int)
    n_objects = len(scene.objects)
    for k, box in enumerate(scene.boxes):
        t1 = (box.lo - origin) * inv
        t2 = (box.hi - origin) * inv
        tmin3 = np.minimum(t1, t2)
        tnear = tmin3.max(axis=1)
        tfar = np.maximum(t1, t2).min(axis=1)
        hit = (tfar >= tnear) & (tnear > 1e-9) & (tnear < best_t)
        if not hit.any():
            continue
        idx = np.nonzero(hit)[0]
        axis = tmin3[idx].argmax(axis=1)
        if box.porosity > 0 and not ignore_porosity and k < n_objects:
            face = 2 * axis + (dirs[idx, axis] < 0)
            p = origin + dirs[idx] * tnear[idx, None]
            u, v = _face_uv(axis, p, box.lo)
            cell = scene.porosity_cell
            solid = cell_hash_faces(k, face, np.floor(u / cell), np.floor(v / cell)) >= box.porosity
            idx, axis = idx[solid], axis[solid]
        best_t[idx] = tnear[idx]
        best_box[idx] = k
        best_axis[idx] = axis
    face = 2 * best_axis + (dirs[np.arange(n), best_axis] < 0)
    hit = best_box >= 0
    u = np.zeros(n)
    v = np.zeros(n)
    if hit.any():
        p = origin + dirs[hit] * best_t[hit, None]
        los = np.array([b.lo for b in scene.boxes])
        u[hit], v[hit] = _face_uv(best_axis[hit], p, los[best_box[hit]])
    return _Hits(best_t, best_box, best_axis, face, u, v)


def cell_hash_faces(obj_index: int, faces, iu, iv) -> np.ndarray:
    faces = np.asarray(faces)
    out = np.empty(faces.shape, dtype=float)
    for f in np.unique(faces):
        sel = faces == f
        out[sel] = cell_hash(obj_index, int(f), np.asarray(iu)[sel], np.asarray(iv)[sel])
    return out


def cast_gaze_ray(scene: SceneSpec, camera: CameraPose, pixel, intr: CameraIntrinsics | None = None) -> float:
    """Distance (m) from the eye to the first surface along the gaze ray."""
    intr = intr or default_intrinsics()
    return float(cast_gaze_rays(scene, camera, [pixel], intr)[0])


def cast_gaze_rays(scene, camera: CameraPose, pixels, intr: CameraIntrinsics) -> np.ndarray:
    pixels = np.asarray(pixels, float).reshape(-1, 2)
    hits = trace(scene, camera.position, camera.rays(intr, pixels[:, 0], pixels[:, 1]))
    return hits.t


def object_at(scene: SceneSpec, camera: CameraPose, pixel, intr: CameraIntrinsics | None = None,
              ignore_porosity: bool = True) -> str | None:
    """Id of the scene object under ``pixel`` (None for table/wall/floor)."""
    intr = intr or default_intrinsics()
    d = camera.rays(intr, [pixel[0]], [pixel[1]])
    k = int(trace(scene, camera.position, d, ignore_porosity=ignore_porosity).box[0])
    return scene.objects[k].id if 0 <= k < len(scene.objects) else None


# ------------------------------------------------------------------ textures

def _rgb(mask, a, b):
    return np.where(mask[:, None], np.asarray(a, float), np.asarray(b, float))


def _tex_v1(u, v, w, h):
    # leafy canopy over a terracotta pot
    leaves = np.sin(u * 95) + np.sin(v * 80 + u * 40) + np.sin((u - v) * 130) > 0.3
    col = _rgb(leaves, (70, 160, 55), (25, 85, 35))
    pot = v < 0.28 * h
    potc = _rgb((v > 0.22 * h), (150, 70, 40), (195, 100, 60))
    return np.where(pot[:, None], potc, col)


def _tex_r1(u, v, w, h):
    # spiky aloe: slanted stripes, white pot
    s = np.sin((u * math.cos(0.35) + v * math.sin(0.35)) * 2 * math.pi / 0.025)
    col = _rgb(s > 0, (120, 190, 80), (200, 225, 120))
    pot = v < 0.25 * h
    potc = _rgb(np.sin(u * 2 * math.pi / 0.02) > 0.6, (150, 150, 150), (235, 235, 225))
    return np.where(pot[:, None], potc, col)


def _tex_r2(u, v, w, h):
    # guitar: wooden body with rings, dark sound hole and neck
    cx, cy = 0.5 * w, 0.35 * h
    r = np.hypot(u - cx, v - cy)
    rings = np.sin(r * 2 * math.pi / 0.015) > 0.5
    col = _rgb(rings, (150, 80, 30), (225, 150, 70))
    col = np.where((r < 0.14 * w)[:, None], np.array([20.0, 15.0, 10.0]), col)
    neck = (v > 0.68 * h) & (np.abs(u - cx) < 0.15 * w)
    frets = np.sin(v * 2 * math.pi / 0.012) > 0.7
    neckc = _rgb(frets, (230, 230, 230), (70, 40, 20))
    head = v > 0.68 * h
    col = np.where(head[:, None], np.where(neck[:, None], neckc, np.array([245.0, 240.0, 230.0])), col)
    return col


def _tex_v2(u, v, w, h):
    # marble bust: veined stone
    vein = np.abs(np.sin(u * 40 + 3.0 * np.sin(v * 25) + v * 15)) < 0.18
    col = _rgb(vein, (110, 110, 125), (220, 220, 228))
    base = v < 0.2 * h
    return np.where(base[:, None], np.array([90.0, 90.0, 100.0]), col)


def _tex_r3(u, v, w, h):
    # amplifier: dotted grille, tan control strip with knobs
    gu = (u % 0.012) - 0.006
    gv = (v % 0.012) - 0.006
    dots = np.hypot(gu, gv) < 0.0035
    col = _rgb(dots, (115, 115, 115), (28, 28, 30))
    strip = v > 0.78 * h
    knob = (np.hypot((u % 0.025) - 0.0125, v - 0.89 * h) < 0.006)
    stripc = _rgb(knob, (20, 20, 20), (200, 170, 115))
    return np.where(strip[:, None], stripc, col)


def _tex_v3(u, v, w, h):
    # canister: red with yellow bands and a white label
    bands = np.sin(v * 2 * math.pi / 0.03) > 0.4
    col = _rgb(bands, (245, 205, 40), (205, 35, 35))
    label = (np.abs(u - 0.5 * w) < 0.3 * w) & (np.abs(v - 0.5 * h) < 0.15 * h)
    text = label & (np.sin(u * 2 * math.pi / 0.008) > 0.3) & (np.abs(v - 0.5 * h) < 0.05 * h)
    col = np.where(label[:, None], np.array([240.0, 240.0, 240.0]), col)
    return np.where(text[:, None], np.array([40.0, 40.0, 60.0]), col)


def _tex_table(u, v, w, h):
    grain = np.sin(v * 2 * math.pi / 0.04 + 0.8 * np.sin(u * 3.0)) > 0.6
    return _rgb(grain, (120, 82, 48), (150, 108, 66))


def _tex_wall(u, v, w, h):
    tiles = ((np.floor(u / 0.5) + np.floor(v / 0.5)) % 2) == 0
    return _rgb(tiles, (176, 184, 196), (186, 192, 202))


def _tex_floor(u, v, w, h):
    return np.tile(np.array([[88.0, 88.0, 92.0]]), (len(u), 1))


TEXTURES = {"v1": _tex_v1, "r1": _tex_r1, "r2": _tex_r2, "v2": _tex_v2, "r3": _tex_r3,
            "v3": _tex_v3, "table": _tex_table, "wall": _tex_wall, "floor": _tex_floor}
# flat shading per face id (2 * axis + negative-direction flag)
_FACE_SHADE = np.array([0.72, 0.72, 0.85, 1.12, 1.0, 1.0])
_SKY = np.array([200.0, 205.0, 215.0])


def _shade(scene: SceneSpec, hits: _Hits) -> np.ndarray:
    n = hits.t.shape[0]
    out = np.tile(_SKY, (n, 1))
    for k, box in enumerate(scene.boxes):
        sel = hits.box == k
        if not sel.any():
            continue
        w, h, d = box.extent
        axis = hits.axis[sel]
        fw = np.where(axis == 0, d, w)
        fh = np.where(axis == 1, d, h)
        col = TEXTURES[box.texture](hits.u[sel], hits.v[sel], fw, fh)
        out[sel] = col * _FACE_SHADE[hits.face[sel]][:, None]
    return out


def render_frame(scene: SceneSpec, camera: CameraPose, intr: CameraIntrinsics | None = None,
                 supersample: int = 2) -> np.ndarray:
    """Flat-shaded perspective image (uint8 RGB) by per-pixel nearest-hit ray casting."""
    intr = intr or default_intrinsics()
    s = int(supersample)
    offs = (np.arange(s) + 0.5) / s
    xs = (np.arange(intr.res_x)[:, None] + offs[None, :]).ravel()
    ys = (np.arange(intr.res_y)[:, None] + offs[None, :]).ravel()
    gx, gy = np.meshgrid(xs, ys)
    hits = trace(scene, camera.position, camera.rays(intr, gx.ravel(), gy.ravel()))
    img = _shade(scene, hits).reshape(intr.res_y, s, intr.res_x, s, 3).mean(axis=(1, 3))
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def render_object_ids(scene: SceneSpec, camera: CameraPose, intr: CameraIntrinsics | None = None,
                      ignore_porosity: bool = True) -> np.ndarray:
    """Per-pixel index into ``scene.objects`` (-1 for props and misses)."""
    intr = intr or default_intrinsics()
    gx, gy = np.meshgrid(np.arange(intr.res_x) + 0.5, np.arange(intr.res_y) + 0.5)
    hits = trace(scene, camera.position, camera.rays(intr, gx.ravel(), gy.ravel()),
                 ignore_porosity=ignore_porosity)
    ids = np.where(hits.box < len(scene.objects), hits.box, BACKGROUND_ID)
    return ids.reshape(intr.res_y, intr.res_x)


# ------------------------------------------------------------------- tasks

@dataclass(frozen=True)
class TaskSpec:
    order: str = "LR"
    depth_level: float = 1.5
    dwell_ms: float = 600.0
    noise_deg: float = 0.08
    sample_rate_hz: float = 30.0
    seed: int = 0
    participant: str = "P1"
    saccade_samples: int = 2
    head_jitter_deg: float = 0.0
    target_spread: float = 0.3  # central fraction of the face the eye may land on
    landing_sd_deg: float = 1.5  # angular scatter of the landing point around the aim

    def __post_init__(self):
        if self.order not in ("LR", "RL"):
            raise ValueError(f"order must be LR or RL, got {self.order!r}")
        if not self.depth_level > 0:
            raise ValueError(f"depth_level must be positive, got {self.depth_level}")
        if self.noise_deg < 0:
            raise ValueError("noise_deg must be >= 0")
        if not self.sample_rate_hz > 0:
            raise ValueError("sample_rate_hz must be positive")
        if self.dwell_ms < 100.0:
            raise ValueError("dwell_ms must be at least the 100 ms fixation minimum")

    @classmethod
    def from_config(cls, text: str) -> "TaskSpec":
        kwargs = {}
        types = {"order": str, "depth_level": float, "dwell_ms": float, "noise_deg": float,
                 "sample_rate_hz": float, "seed": int, "participant": str,
                 "saccade_samples": int, "head_jitter_deg": float, "target_spread": float,
                 "landing_sd_deg": float}
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in types:
                raise ValueError(f"unknown task key {key!r}")
            kwargs[key] = types[key](value.strip())
        return cls(**kwargs)

    @property
    def sequence(self) -> tuple[str, ...]:
        return OBJECT_ORDER if self.order == "LR" else tuple(reversed(OBJECT_ORDER))


def _pick_target(scene: SceneSpec, obj: SceneObject, rng: np.random.Generator,
                 spread: float, eye=None, landing_sd: float = 0.0) -> np.ndarray:
    """A point on the object's front face; on porous objects always a solid cell.

    The aim is uniform over the central ``spread`` fraction of the face; the
    landing point then scatters by ``landing_sd`` radians as seen from
    ``eye`` and is clamped to the face.
    """
    w, h, _ = obj.extent
    u = w * (0.5 + spread * (rng.random() - 0.5))
    v = h * (0.5 + spread * (rng.random() - 0.5))
    if landing_sd > 0 and eye is not None:
        dist = float(np.linalg.norm(obj.lo + np.array([u, v, 0.0]) - np.asarray(eye)))
        du, dv = dist * np.tan(landing_sd * rng.standard_normal(2))
        u = float(np.clip(u + du, 0.05 * w, 0.95 * w))
        v = float(np.clip(v + dv, 0.05 * h, 0.95 * h))
    if obj.porosity > 0:
        k = scene.index(obj.id)
        cell = scene.porosity_cell
        iu0, iv0 = math.floor(u / cell), math.floor(v / cell)
        for radius in range(0, 50):
            cand = [(iu0 + a, iv0 + b) for a in range(-radius, radius + 1)
                    for b in range(-radius, radius + 1) if max(abs(a), abs(b)) == radius]
            ius = np.array([c[0] for c in cand])
            ivs = np.array([c[1] for c in cand])
            solid = cell_hash(k, 4, ius, ivs) >= obj.porosity
            # a leaf, not a speck between holes: most neighbours solid too
            around = sum(cell_hash(k, 4, ius + a, ivs + b) >= obj.porosity
                         for a in (-1, 0, 1) for b in (-1, 0, 1) if a or b)
            ok = solid & (around >= 6)
            if ok.any():
                j = int(np.flatnonzero(ok)[0])
                u = (ius[j] + 0.35 + 0.3 * rng.random()) * cell
                v = (ivs[j] + 0.35 + 0.3 * rng.random()) * cell
                break
    lo = obj.lo
    return np.array([lo[0] + u, lo[1] + v, lo[2]])


def _eye_position(scene: SceneSpec, depth_level: float, x: float = 0.0) -> tuple:
    return (x, scene.camera_height, -depth_level)


@dataclass
class _Timeline:
    t: list = field(default_factory=list)
    x: list = field(default_factory=list)
    y: list = field(default_factory=list)
    valid: list = field(default_factory=list)
    pose: list = field(default_factory=list)
    target: list = field(default_factory=list)


def _assemble(scene: SceneSpec, intr: CameraIntrinsics, tl: _Timeline, meta: dict,
              frame_rate: float = 30.0) -> GazeRecording:
    t = np.asarray(tl.t)
    x = np.asarray(tl.x)
    y = np.asarray(tl.y)
    valid = np.asarray(tl.valid, bool) & (x >= 0) & (x < intr.res_x) & (y >= 0) & (y < intr.res_y)
    depth = np.full(len(t), np.nan)
    poses = list(dict.fromkeys(tl.pose))
    for pose in poses:
        sel = np.array([p == pose for p in tl.pose]) & valid
        if sel.any():
            depth[sel] = cast_gaze_rays(scene, pose, np.column_stack([x[sel], y[sel]]), intr)

    frame_times, frame_files, names = [], [], {}
    n_frames = int(math.floor(t[-1] / (1000.0 / frame_rate))) + 1
    for k in range(n_frames):
        ft = k * 1000.0 / frame_rate
        i = max(int(np.searchsorted(t, ft, side="right")) - 1, 0)
        pose = tl.pose[i]
        if pose not in names:
            names[pose] = f"frames/{len(names):06d}.png"
        frame_times.append(ft)
        frame_files.append(names[pose])
    # frames only change with the head pose, so each pose is rendered once
    images = ordered_map(lambda pose: _render_cached(scene, pose, intr), list(names))
    cache = {names[pose]: img for pose, img in zip(names, images)}
    pose_of = {name: pose for pose, name in names.items()}
    rec = GazeRecording(intr, t, x, y, depth, valid, frame_times, frame_files, meta,
                        frame_cache=cache)
    rec.extras["poses"] = pose_of
    rec.extras["targets"] = list(tl.target)
    return rec


_RENDER_CACHE: dict = {}


def _render_cached(scene, pose, intr):
    key = (scene, pose, intr)
    if key not in _RENDER_CACHE:
        if len(_RENDER_CACHE) > 256:
            _RENDER_CACHE.clear()
        img = render_frame(scene, pose, intr)
        img.setflags(write=False)
        _RENDER_CACHE[key] = img
    return _RENDER_CACHE[key]


def _meta(intr, participant, condition, depth_level, frame_rate, **extra):
    meta = {"participant": participant, "condition": condition,
            "depth_level_m": repr(float(depth_level)),
            "h_fov_deg": repr(math.degrees(intr.h_fov)), "v_fov_deg": repr(math.degrees(intr.v_fov)),
            "res_x": str(intr.res_x), "res_y": str(intr.res_y),
            "frame_rate_hz": repr(float(frame_rate))}
    meta.update({k: str(v) for k, v in extra.items()})
    return meta


def generate_recording(scene: SceneSpec, task: TaskSpec,
                       intr: CameraIntrinsics | None = None) -> GazeRecording:
    """Static-viewpoint recording: the head turns to each object in task
    order and the eye dwells on one point of it."""
    intr = intr or default_intrinsics()
    rng = np.random.default_rng(task.seed)
    dt = 1000.0 / task.sample_rate_hz
    eye = _eye_position(scene, task.depth_level)
    sigma_px = math.radians(task.noise_deg) * intr.focal_x
    head_sd = math.radians(task.head_jitter_deg)
    tl = _Timeline()
    n_dwell = max(int(round(task.dwell_ms / dt)) + 1, 2)
    prev_target = None
    k = 0
    for oid in task.sequence:
        obj = scene.object(oid)
        target = _pick_target(scene, obj, rng, task.target_spread, eye,
                              math.radians(task.landing_sd_deg))
        head = CameraPose.look_at(eye, obj.center)
        head = CameraPose(head.position, head.yaw + head_sd * rng.standard_normal(),
                          head.pitch + head_sd * rng.standard_normal())
        gx, gy = head.project(intr, target)
        if prev_target is not None:
            px, py = head.project(intr, prev_target)
            for s in range(1, task.saccade_samples + 1):
                a = s / (task.saccade_samples + 1)
                tl.t.append(k * dt)
                tl.x.append(px + a * (gx - px))
                tl.y.append(py + a * (gy - py))
                tl.valid.append(True)
                tl.pose.append(head)
                tl.target.append(None)
                k += 1
        noise = sigma_px * rng.standard_normal((n_dwell, 2))
        for s in range(n_dwell):
            tl.t.append(k * dt)
            tl.x.append(gx + noise[s, 0])
            tl.y.append(gy + noise[s, 1])
            tl.valid.append(True)
            tl.pose.append(head)
            tl.target.append(oid)
            k += 1
        prev_target = target
    meta = _meta(intr, task.participant, task.order, task.depth_level, task.sample_rate_hz,
                 seed=task.seed)
    return _assemble(scene, intr, tl, meta, task.sample_rate_hz)


APPROACH_DISTANCES = (3.0, 2.5, 2.0, 1.5, 1.0, 0.5)


def generate_approach_recording(scene: SceneSpec, intr: CameraIntrinsics | None = None,
                                seed: int = 0, target_id: str = "R2",
                                distances=APPROACH_DISTANCES, dwell_ms: float = 600.0,
                                noise_deg: float = 0.08, sample_rate_hz: float = 30.0,
                                transit_samples: int = 6, participant: str = "P1") -> GazeRecording:
    """The viewer walks toward one object in stops, keeping gaze on it.

    Samples while walking are flagged invalid (tracking lost during motion);
    frames keep the pose of the last stop until the next one is reached.
    """
    intr = intr or default_intrinsics()
    rng = np.random.default_rng(seed)
    obj = scene.object(target_id)
    dt = 1000.0 / sample_rate_hz
    sigma_px = math.radians(noise_deg) * intr.focal_x
    n_dwell = max(int(round(dwell_ms / dt)) + 1, 2)
    tl = _Timeline()
    k = 0
    for i, d in enumerate(distances):
        eye = (obj.center[0], scene.camera_height, obj.lo[2] - d)
        head = CameraPose.look_at(eye, obj.center)
        target = _pick_target(scene, obj, rng, 0.3)
        gx, gy = head.project(intr, target)
        if i > 0:
            for _ in range(transit_samples):
                tl.t.append(k * dt)
                tl.x.append(gx)
                tl.y.append(gy)
                tl.valid.append(False)
                tl.pose.append(tl.pose[-1])
                tl.target.append(None)
                k += 1
        noise = sigma_px * rng.standard_normal((n_dwell, 2))
        for s in range(n_dwell):
            tl.t.append(k * dt)
            tl.x.append(gx + noise[s, 0])
            tl.y.append(gy + noise[s, 1])
            tl.valid.append(True)
            tl.pose.append(head)
            tl.target.append(target_id)
            k += 1
    meta = _meta(intr, participant, "APPROACH", distances[0], sample_rate_hz, seed=seed,
                 task="approach", target=target_id)
    return _assemble(scene, intr, tl, meta, sample_rate_hz)


# ------------------------------------------------------------- benchmarks

@dataclass(frozen=True)
class BenchmarkEntry:
    name: str
    participant: str
    condition: str
    depth_level: float
    repetition: int
    recording: GazeRecording


def recording_name(condition: str, depth_level: float, repetition: int) -> str:
    return f"{condition}_d{int(round(depth_level * 100)):03d}_s{repetition:02d}"


def generate_benchmark(seed: int = 0, scanpaths: int = 7, depth_levels=DEPTH_LEVELS,
                       scene: SceneSpec | None = None, intr: CameraIntrinsics | None = None,
                       **task_kwargs) -> list[BenchmarkEntry]:
    """``scanpaths`` recordings per condition and depth level.

    Scanpath ``s`` belongs to participant ``P{s+1}``, so one participant
    contributes an LR and an RL recording at every depth level.
    """
    scene = scene or build_benchmark_scene()
    intr = intr or default_intrinsics()
    out = []
    for cond in ("LR", "RL"):
        for depth in depth_levels:
            for s in range(scanpaths):
                task = TaskSpec(order=cond, depth_level=depth, participant=f"P{s + 1}",
                                seed=derive_seed(seed, "recording", cond, depth, s), **task_kwargs)
                rec = generate_recording(scene, task, intr)
                out.append(BenchmarkEntry(recording_name(cond, depth, s), task.participant,
                                          cond, depth, s, rec))
    return out


def write_recording(rec: GazeRecording, path) -> Path:
    """Save a simulated recording plus a ``poses.csv`` ground-truth sidecar."""
    root = save_recording(rec, path)
    poses = rec.extras.get("poses", {})
    if poses:
        lines = ["frame_file,x,y,z,yaw,pitch"]
        for name, pose in poses.items():
            x, y, z = pose.position
            lines.append(f"{name},{x!r},{y!r},{z!r},{pose.yaw!r},{pose.pitch!r}")
        (root / "poses.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return root


def load_poses(path) -> dict[str, CameraPose]:
    out = {}
    p = Path(path) / "poses.csv"
    for line in p.read_text(encoding="utf-8").splitlines()[1:]:
        name, x, y, z, yaw, pitch = line.split(",")
        out[name] = CameraPose((float(x), float(y), float(z)), float(yaw), float(pitch))
    return out


def pose_at(rec: GazeRecording, t_ms: float) -> CameraPose:
    poses = rec.extras.get("poses")
    if poses is None:
        if rec.root is None:
            raise ValueError("recording carries no camera poses")
        poses = rec.extras["poses"] = load_poses(rec.root)
    return poses[rec.frame_files[rec.frame_index_at(t_ms)]]


def label_fixations(scene: SceneSpec, rec: GazeRecording, fixations: list[Fixation]) -> list[str | None]:
    """Ground-truth object id under each fixation centroid."""
    return [object_at(scene, pose_at(rec, f.midpoint), (f.centroid_x, f.centroid_y),
                      rec.intrinsics) for f in fixations]


def true_distance(scene: SceneSpec, rec: GazeRecording, fixation: Fixation) -> float:
    """Eye-to-surface distance at the fixation centroid, ignoring porosity."""
    pose = pose_at(rec, fixation.midpoint)
    d = pose.rays(rec.intrinsics, [fixation.centroid_x], [fixation.centroid_y])
    return float(trace(scene, pose.position, d, ignore_porosity=True).t[0])


def object_footprint(scene: SceneSpec, rec: GazeRecording, patch, object_id: str) -> float:
    """Fraction of a patch's crop covered by ``object_id`` (edge pixels
    replicated the same way the crop was padded)."""
    pose = pose_at(rec, (patch.start_ms + patch.end_ms) / 2.0)
    ids = _ids_cached(scene, pose, rec.intrinsics)
    x0, y0, w, h = patch.crop_rect
    rows = np.clip(np.arange(y0, y0 + h), 0, ids.shape[0] - 1)
    cols = np.clip(np.arange(x0, x0 + w), 0, ids.shape[1] - 1)
    return float(np.mean(ids[np.ix_(rows, cols)] == scene.index(object_id)))


_IDS_CACHE: dict = {}


def _ids_cached(scene, pose, intr):
    key = (scene, pose, intr)
    if key not in _IDS_CACHE:
        if len(_IDS_CACHE) > 64:
            _IDS_CACHE.clear()
        _IDS_CACHE[key] = render_object_ids(scene, pose, intr)
    return _IDS_CACHE[key]
