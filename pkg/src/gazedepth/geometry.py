"""Visual-angle geometry for gaze thumbnails.

All angles are radians. Pixel extents come in two flavours: the exact
floating-point extent (``*_extent``) and the rounded, frame-clamped
:class:`PatchSizePx` used for cropping.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum


class PatchExceedsFrameWarning(UserWarning):
    """The requested patch is larger than the camera frame on some axis."""


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole front camera: field of view and resolution."""

    h_fov: float
    v_fov: float
    res_x: int
    res_y: int

    def __post_init__(self):
        for name in ("h_fov", "v_fov"):
            value = getattr(self, name)
            if not 0.0 < value < math.pi:
                raise ValueError(f"{name} must lie in (0, pi), got {value!r}")
        if self.res_x < 1 or self.res_y < 1:
            raise ValueError(f"resolution must be >= 1 px, got {self.res_x}x{self.res_y}")

    @classmethod
    def from_degrees(cls, h_fov_deg, v_fov_deg, res_x, res_y):
        return cls(math.radians(h_fov_deg), math.radians(v_fov_deg), int(res_x), int(res_y))

    @property
    def focal_x(self) -> float:
        """Focal length in pixels along x."""
        return self.res_x / (2.0 * math.tan(self.h_fov / 2.0))

    @property
    def focal_y(self) -> float:
        return self.res_y / (2.0 * math.tan(self.v_fov / 2.0))

    def pixels_to_degrees_x(self, px: float) -> float:
        """Angular size (degrees) of a horizontal pixel span centred on the axis."""
        return math.degrees(2.0 * math.atan(px / (2.0 * self.focal_x)))

    def pixels_to_degrees_y(self, px: float) -> float:
        return math.degrees(2.0 * math.atan(px / (2.0 * self.focal_y)))


@dataclass(frozen=True)
class PatchSizePx:
    width: int
    height: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"patch size must be >= 1 px, got {self.width}x{self.height}")


class PatchMode(str, Enum):
    CLASSIC = "classic"
    DEPTH_ADAPTIVE = "adaptive"

    @classmethod
    def parse(cls, value) -> "PatchMode":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "").replace("_", "")
        aliases = {"classic": cls.CLASSIC, "adaptive": cls.DEPTH_ADAPTIVE,
                   "depthadaptive": cls.DEPTH_ADAPTIVE}
        if key not in aliases:
            raise ValueError(f"unknown patch mode {value!r}")
        return aliases[key]

    @property
    def tag(self) -> str:
        return self.value


# Size presets: classic visual angle (degrees) and adaptive actual length (meters).
PRESETS = {
    "small": (2.0, 0.08),
    "mid": (5.0, 0.20),
    "large": (10.0, 0.40),
}


@dataclass(frozen=True)
class PatchSpec:
    """How to size a thumbnail. Only the field matching ``mode`` is consulted."""

    mode: PatchMode
    theta: float | None = None
    actual_length: float | None = None
    canonical_px: int = 64

    def __post_init__(self):
        object.__setattr__(self, "mode", PatchMode.parse(self.mode))
        if self.canonical_px < 8:
            raise ValueError(f"canonical_px must be >= 8, got {self.canonical_px}")
        if self.mode is PatchMode.CLASSIC:
            if self.theta is None or not 0.0 < self.theta < math.pi:
                raise ValueError(f"classic mode needs theta in (0, pi), got {self.theta!r}")
        elif self.actual_length is None or not self.actual_length > 0.0:
            raise ValueError(f"adaptive mode needs actual_length > 0, got {self.actual_length!r}")

    @classmethod
    def from_preset(cls, preset: str, mode, canonical_px: int = 64) -> "PatchSpec":
        try:
            theta_deg, length = PRESETS[preset.lower()]
        except KeyError:
            raise ValueError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}") from None
        mode = PatchMode.parse(mode)
        if mode is PatchMode.CLASSIC:
            return cls(mode, theta=math.radians(theta_deg), canonical_px=canonical_px)
        return cls(mode, actual_length=length, canonical_px=canonical_px)

    def size_for(self, intr: CameraIntrinsics, depth: float | None = None) -> PatchSizePx:
        if self.mode is PatchMode.CLASSIC:
            return classic_patch_size(intr, self.theta)
        return adaptive_patch_size(intr, self.actual_length, depth)


def _check_angle(theta: float, name: str = "theta") -> None:
    if not (isinstance(theta, (int, float)) and 0.0 < theta < math.pi):
        raise ValueError(f"{name} must lie in (0, pi) radians, got {theta!r}")


def _check_positive(value: float, name: str) -> None:
    if value is None or not value > 0.0 or math.isinf(value):
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")


def actual_length(theta: float, distance: float) -> float:
    """Physical extent (m) covered by visual angle ``theta`` at ``distance``."""
    _check_angle(theta)
    _check_positive(distance, "distance")
    return 2.0 * math.tan(theta / 2.0) * distance


def image_plane_dimensions(intr: CameraIntrinsics, distance: float) -> tuple[float, float]:
    """Width and height (m) of the camera frustum cross-section at ``distance``."""
    return actual_length(intr.h_fov, distance), actual_length(intr.v_fov, distance)


def classic_patch_extent(intr: CameraIntrinsics, theta: float) -> tuple[float, float]:
    """Unrounded pixel extent of a fixed-angle patch; independent of depth."""
    _check_angle(theta)
    t = math.tan(theta / 2.0)
    return (t / math.tan(intr.h_fov / 2.0) * intr.res_x,
            t / math.tan(intr.v_fov / 2.0) * intr.res_y)


def adaptive_patch_extent(intr: CameraIntrinsics, c: float, d: float) -> tuple[float, float]:
    """Unrounded pixel extent of a patch covering ``c`` meters at depth ``d``."""
    _check_positive(c, "actual length c")
    _check_positive(d, "depth d")
    return (c / (2.0 * d * math.tan(intr.h_fov / 2.0)) * intr.res_x,
            c / (2.0 * d * math.tan(intr.v_fov / 2.0)) * intr.res_y)


def _round_clamp(w: float, h: float, intr: CameraIntrinsics, full_frame: bool = False) -> PatchSizePx:
    # ties round half-up so sizes never shrink at .5
    wi = int(math.floor(w + 0.5))
    hi = int(math.floor(h + 0.5))
    if full_frame or wi > intr.res_x or hi > intr.res_y:
        warnings.warn(
            f"patch exceeds frame: {w:.1f}x{h:.1f} px requested, "
            f"frame is {intr.res_x}x{intr.res_y}; clamping",
            PatchExceedsFrameWarning, stacklevel=3)
    return PatchSizePx(min(max(wi, 1), intr.res_x), min(max(hi, 1), intr.res_y))


def classic_patch_size(intr: CameraIntrinsics, theta: float) -> PatchSizePx:
    """Fixed visual-angle crop size in pixels."""
    w, h = classic_patch_extent(intr, theta)
    return _round_clamp(w, h, intr, full_frame=theta >= min(intr.h_fov, intr.v_fov))


def adaptive_patch_size(intr: CameraIntrinsics, c: float, d: float) -> PatchSizePx:
    """Depth-adaptive crop size: constant physical extent ``c`` at depth ``d``."""
    return _round_clamp(*adaptive_patch_extent(intr, c, d), intr)
