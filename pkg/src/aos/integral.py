"""Focal-plane registration and frame averaging (integral imaging).

Frames from a nadir, constant-altitude, linear path are warped onto a virtual
focal plane at distance ``h`` below the aperture line and averaged. For this
geometry the plane-induced mapping degenerates to a pure horizontal shift of
``f_px * dx / h`` pixels per meter of camera offset, so registration is a 1D
bilinear resample. Pixels whose source coordinate falls outside the frame are
excluded from the average through per-pixel coverage counts.

Stereo pairs are two integrals whose averaging windows sit at ``u -+ e_f/2``
but whose pixel grids are both anchored at the central viewpoint ``u``
(``grid_viewpoint``). Anchoring both eyes to one grid converges them on the
focal plane: features on the plane land on identical pixels (zero disparity)
and a feature at height ``h_t`` carries the residual parallax
``f_px * e_f * (1/(h - h_t) - 1/h)`` pixels (crossed, i.e. negative in
right-minus-left terms).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError, WindowError
from .scene import CameraIntrinsics, Frame, Pose, ScanStack

__all__ = [
    "IntegralParams",
    "IntegralImage",
    "StereoPair",
    "project_to_viewpoint",
    "integrate",
    "stereo_pair",
    "compose_display",
    "window_constraint",
]


@dataclass(frozen=True)
class IntegralParams:
    """Virtual viewpoint u, aperture a and focal distance h (meters).

    grid_viewpoint optionally anchors the output pixel grid at a different
    x than the averaging window center; stereo eyes use this to share the
    central camera's grid. None means "same as viewpoint".
    """

    viewpoint: float
    aperture: float = 0.0
    focal_distance: float = 26.0
    grid_viewpoint: float | None = None

    def __post_init__(self):
        if self.aperture < 0:
            raise ValidationError(f"aperture must be >= 0, got {self.aperture}")
        if self.focal_distance <= 0:
            raise ValidationError(f"focal distance must be > 0, got {self.focal_distance}")

    @property
    def anchor(self) -> float:
        return self.viewpoint if self.grid_viewpoint is None else self.grid_viewpoint

    @property
    def window(self) -> tuple[float, float]:
        half = self.aperture / 2.0
        return (self.viewpoint - half, self.viewpoint + half)


@dataclass
class IntegralImage:
    """Averaged, occlusion-suppressed view. image is NaN where coverage is 0."""

    image: np.ndarray
    coverage: np.ndarray
    params: IntegralParams
    frame_count: int
    intrinsics: CameraIntrinsics
    altitude: float
    frame_indices: tuple[int, ...]

    @property
    def shape(self) -> tuple[int, int]:
        return self.image.shape


@dataclass
class StereoPair:
    """Left/right integral eyes separated by baseline e_f, sharing a and h."""

    left: IntegralImage
    right: IntegralImage
    baseline: float

    def __post_init__(self):
        if self.left.shape != self.right.shape:
            raise ValidationError("stereo eyes must share image dimensions")

    @property
    def aperture(self) -> float:
        return self.left.params.aperture

    @property
    def focal_distance(self) -> float:
        return self.left.params.focal_distance

    @property
    def intrinsics(self) -> CameraIntrinsics:
        return self.left.intrinsics


def project_to_viewpoint(frame: Frame, virtual_pose: Pose, h: float
                         ) -> tuple[np.ndarray, np.ndarray]:
    """Warp a frame onto the focal plane at distance h, seen from virtual_pose.

    Returns (registered image as float64 with NaN outside coverage,
    boolean coverage mask). A zero camera offset is an identity warp and
    reproduces the frame bit-exactly.
    """
    if h <= 0:
        raise ValidationError(f"focal distance must be > 0, got {h}")
    if virtual_pose.z != frame.pose.z:
        raise ValidationError("virtual pose must share the capture altitude")
    shift = frame.intrinsics.f_px * (virtual_pose.x - frame.pose.x) / h
    return _shift_sample(frame.image, shift)


def _shift_sample(image: np.ndarray, shift: float) -> tuple[np.ndarray, np.ndarray]:
    """Sample image at x + shift with 1D bilinear interpolation along rows."""
    w = image.shape[1]
    xs = np.arange(w) + shift
    valid = (xs >= 0.0) & (xs <= w - 1)
    x0 = np.floor(xs).astype(np.int64)
    t = xs - x0
    x0 = np.clip(x0, 0, w - 1)
    x1 = np.clip(x0 + 1, 0, w - 1)
    out = (1.0 - t)[None, :] * image[:, x0] + t[None, :] * image[:, x1]
    out = out.astype(np.float64, copy=False)
    out[:, ~valid] = np.nan
    cov = np.broadcast_to(valid, image.shape)
    return out, cov


def _select_window(stack: ScanStack, lo: float, hi: float) -> list[int]:
    # closed on both ends so frame counts are deterministic at window edges
    return [k for k, f in enumerate(stack.frames) if lo <= f.pose.x <= hi]


def window_constraint(stack: ScanStack) -> str:
    """Human/machine-readable statement of the maximum-baseline constraint."""
    return f"e_f = {stack.path_length:g} m - a is the maximum"


def integrate(stack: ScanStack, params: IntegralParams,
              radiometry: dict[int, tuple[float, float]] | None = None
              ) -> IntegralImage:
    """Average all frames whose pose lies in [u - a/2, u + a/2].

    Contributions are accumulated as sum + coverage count per pixel, so the
    result is independent of frame order and uncovered pixels never bias the
    mean. Raises WindowError naming the window and pose range when no frame
    falls inside the window.

    radiometry optionally maps frame index -> (gain, offset) applied as
    gain * value + offset before averaging; imported recordings sometimes
    need this, the simulator never does.
    """
    lo, hi = params.window
    indices = _select_window(stack, lo, hi)
    if not indices:
        raise WindowError(
            f"aperture window [{lo:g}, {hi:g}] m contains no frames; "
            f"scanned poses span [{stack.x_min:g}, {stack.x_max:g}] m",
            constraint=window_constraint(stack))
    h = params.focal_distance
    anchor = params.anchor
    f_px = stack.intrinsics.f_px
    shape = (stack.intrinsics.height, stack.intrinsics.width)
    total = np.zeros(shape, dtype=np.float64)
    count = np.zeros(shape, dtype=np.int32)
    for k in indices:
        frame = stack.frames[k]
        shift = f_px * (anchor - frame.pose.x) / h
        warped, cov = _shift_sample(frame.image, shift)
        if radiometry and k in radiometry:
            gain, offset = radiometry[k]
            warped = warped * gain + offset
        np.add(total, np.where(cov, warped, 0.0), out=total)
        count += cov
    with np.errstate(invalid="ignore"):
        image = np.where(count > 0, total / np.maximum(count, 1), np.nan)
    return IntegralImage(image=image, coverage=count.astype(np.uint16),
                         params=params, frame_count=len(indices),
                         intrinsics=stack.intrinsics, altitude=stack.altitude,
                         frame_indices=tuple(indices))


def stereo_pair(stack: ScanStack, u: float, e_f: float, a: float, h: float) -> StereoPair:
    """Left/right integrals at u -+ e_f/2, both anchored to the grid at u."""
    if e_f < 0:
        raise ValidationError(f"baseline must be >= 0, got {e_f}")
    left = integrate(stack, IntegralParams(
        viewpoint=u - e_f / 2, aperture=a, focal_distance=h, grid_viewpoint=u))
    right = integrate(stack, IntegralParams(
        viewpoint=u + e_f / 2, aperture=a, focal_distance=h, grid_viewpoint=u))
    return StereoPair(left=left, right=right, baseline=e_f)


def compose_display(pair: StereoPair, mode: str = "side-by-side") -> np.ndarray:
    """Compose a stereo pair for display.

    side-by-side: float radiance image of width 2W (lossless concatenation).
    anaglyph: (H, W, 3) uint8, red = left, green = blue = right, both eyes
    mapped with one shared linear ramp so the channels decompose back to the
    per-eye content up to 8-bit quantization.

    Uncovered pixels are filled with 0.
    """
    if pair.left.shape != pair.right.shape:
        raise ValidationError("stereo eyes must share image dimensions")
    left = np.nan_to_num(pair.left.image, nan=0.0)
    right = np.nan_to_num(pair.right.image, nan=0.0)
    if mode in ("side-by-side", "sbs"):
        return np.hstack([left, right])
    if mode == "anaglyph":
        lo = min(float(np.nanmin(pair.left.image)), float(np.nanmin(pair.right.image)))
        hi = max(float(np.nanmax(pair.left.image)), float(np.nanmax(pair.right.image)))
        span = hi - lo if hi > lo else 1.0
        l8 = np.clip(np.round((left - lo) / span * 255.0), 0, 255).astype(np.uint8)
        r8 = np.clip(np.round((right - lo) / span * 255.0), 0, 255).astype(np.uint8)
        rgb = np.empty(left.shape + (3,), dtype=np.uint8)
        rgb[..., 0] = l8
        rgb[..., 1] = r8
        rgb[..., 2] = r8
        return rgb
    raise ValidationError(f"unknown display mode {mode!r}; use side-by-side or anaglyph")
