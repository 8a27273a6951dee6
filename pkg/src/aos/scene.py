"""Procedural occluded-scene generator and nadir thermal ray caster.

World model: a flat ground plane at z=0 carrying a deterministic value-noise
temperature texture, warm targets of known height standing on it, and a single
canopy layer of opaque horizontal discs (tree crowns). A nadir pinhole camera
flies a straight, constant-altitude path along x and records one frame per
pose. Everything is a pure function of the scene spec and the pose, so frames
are bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

__all__ = [
    "CameraIntrinsics",
    "Pose",
    "Frame",
    "ScanPath",
    "ScanStack",
    "TargetSpec",
    "OccluderLayerSpec",
    "SceneSpec",
    "Scene",
    "generate_scene",
    "render_frame",
    "render_scan",
    "ground_truth_visibility",
    "scene_preset",
    "scene_dynamic_range",
    "DEFAULT_PATH",
    "DEFAULT_INTRINSICS",
    "PRESET_NAMES",
]


# ---------------------------------------------------------------------------
# camera / pose / frame types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole camera: full horizontal field of view (degrees) and resolution."""

    fov_deg: float = 61.0
    width: int = 640
    height: int = 512

    def __post_init__(self):
        if not (0.0 < self.fov_deg < 180.0):
            raise ValidationError(f"fov_deg must be in (0, 180), got {self.fov_deg}")
        if self.width <= 0 or self.height <= 0:
            raise ValidationError(f"resolution must be positive, got {self.width}x{self.height}")

    @property
    def f_px(self) -> float:
        """Focal length in pixels: (width/2) / tan(fov/2)."""
        return (self.width / 2.0) / math.tan(math.radians(self.fov_deg / 2.0))

    @property
    def cx(self) -> float:
        return (self.width - 1) / 2.0

    @property
    def cy(self) -> float:
        return (self.height - 1) / 2.0


@dataclass(frozen=True)
class Pose:
    """Camera position in world meters; orientation is fixed nadir (straight down)."""

    x: float
    y: float = 0.0
    z: float = 26.0

    def __post_init__(self):
        if self.z <= 0:
            raise ValidationError(f"altitude must be positive, got {self.z}")


@dataclass
class Frame:
    """One rendered (or imported) image with its pose and intrinsics."""

    image: np.ndarray
    pose: Pose
    intrinsics: CameraIntrinsics

    def __post_init__(self):
        h, w = self.image.shape
        if (w, h) != (self.intrinsics.width, self.intrinsics.height):
            raise ValidationError(
                f"image shape {w}x{h} does not match intrinsics "
                f"{self.intrinsics.width}x{self.intrinsics.height}")
        if not np.all(np.isfinite(self.image)) or np.any(self.image < 0):
            raise ValidationError("frame radiance values must be finite and >= 0")


@dataclass(frozen=True)
class ScanPath:
    """Linear, constant-altitude flight path along x."""

    x_start: float = -7.0
    length: float = 14.0
    spacing: float = 0.5
    altitude: float = 26.0
    y: float = 0.0

    def __post_init__(self):
        if self.spacing <= 0:
            raise ValidationError(f"spacing must be > 0, got {self.spacing}")
        if self.length < 0:
            raise ValidationError(f"length must be >= 0, got {self.length}")

    def positions(self) -> np.ndarray:
        n = int(math.floor(self.length / self.spacing + 1e-9)) + 1
        return self.x_start + np.arange(n) * self.spacing


@dataclass
class ScanStack:
    """Ordered frames along a 1D synthetic-aperture path.

    Frames are sorted by pose.x on construction; all frames must share
    intrinsics, altitude and y, and x positions must be distinct.
    """

    frames: list[Frame]

    def __post_init__(self):
        if not self.frames:
            raise ValidationError("a scan stack needs at least one frame")
        self.frames = sorted(self.frames, key=lambda f: f.pose.x)
        xs = [f.pose.x for f in self.frames]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValidationError("frame x positions must be strictly increasing")
        first = self.frames[0]
        for f in self.frames[1:]:
            if f.intrinsics != first.intrinsics:
                raise ValidationError("all frames must share intrinsics")
            if f.pose.z != first.pose.z or f.pose.y != first.pose.y:
                raise ValidationError("all frames must share altitude and y (linear path)")

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def xs(self) -> np.ndarray:
        return np.array([f.pose.x for f in self.frames])

    @property
    def intrinsics(self) -> CameraIntrinsics:
        return self.frames[0].intrinsics

    @property
    def altitude(self) -> float:
        return self.frames[0].pose.z

    @property
    def y(self) -> float:
        return self.frames[0].pose.y

    @property
    def x_min(self) -> float:
        return self.frames[0].pose.x

    @property
    def x_max(self) -> float:
        return self.frames[-1].pose.x

    @property
    def path_length(self) -> float:
        return self.x_max - self.x_min

    @property
    def spacing(self) -> float:
        if len(self.frames) < 2:
            return 0.0
        return float(np.median(np.diff(self.xs)))


# ---------------------------------------------------------------------------
# scene specification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TargetSpec:
    """A warm object standing on the ground.

    footprint: a single float is a disc radius; a pair is box half-extents.
    """

    position: tuple[float, float]
    height: float
    footprint: float | tuple[float, float]
    temp: float

    def __post_init__(self):
        if self.height < 0:
            raise ValidationError(f"target height must be >= 0, got {self.height}")
        fp = self.footprint
        if isinstance(fp, (int, float)):
            if fp <= 0:
                raise ValidationError(f"target footprint must be > 0, got {fp}")
        else:
            if len(fp) != 2 or fp[0] <= 0 or fp[1] <= 0:
                raise ValidationError(f"box footprint half-extents must be > 0, got {fp}")
        if self.temp < 0:
            raise ValidationError("target radiance must be >= 0")

    @property
    def is_disc(self) -> bool:
        return isinstance(self.footprint, (int, float))

    def half_extents(self) -> tuple[float, float]:
        if self.is_disc:
            return (float(self.footprint), float(self.footprint))
        return (float(self.footprint[0]), float(self.footprint[1]))

    def contains(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        px, py = self.position
        if self.is_disc:
            r = float(self.footprint)
            return (x - px) ** 2 + (y - py) ** 2 <= r * r
        hx, hy = self.footprint
        return (np.abs(x - px) <= hx) & (np.abs(y - py) <= hy)


@dataclass(frozen=True)
class OccluderLayerSpec:
    """Poisson-placed opaque crown discs: (mean, jitter) for height and radius."""

    density: float = 0.0
    crown_height: tuple[float, float] = (21.0, 1.5)
    crown_radius: tuple[float, float] = (1.8, 0.7)
    temp: float = 20.0

    def __post_init__(self):
        if self.density < 0:
            raise ValidationError(f"occluder density must be >= 0, got {self.density}")
        if self.crown_height[0] <= 0 or self.crown_height[1] < 0:
            raise ValidationError(f"crown_height (mean, jitter) invalid: {self.crown_height}")
        if self.crown_radius[0] <= 0 or self.crown_radius[1] < 0:
            raise ValidationError(f"crown_radius (mean, jitter) invalid: {self.crown_radius}")
        if self.crown_radius[1] >= self.crown_radius[0]:
            raise ValidationError("crown radius jitter must be smaller than the mean")
        if self.temp < 0:
            raise ValidationError("occluder radiance must be >= 0")


@dataclass(frozen=True)
class SceneSpec:
    """Full description of a procedural world; the seed fixes everything."""

    extent: tuple[float, float] = (50.0, 30.0)
    ground_temp: float = 30.0
    ground_noise_amp: float = 1.5
    targets: tuple[TargetSpec, ...] = ()
    occluders: OccluderLayerSpec = field(default_factory=OccluderLayerSpec)
    seed: int = 0

    def __post_init__(self):
        ex, ey = self.extent
        if ex <= 0 or ey <= 0:
            raise ValidationError(f"extent must be positive, got {self.extent}")
        if self.ground_noise_amp < 0:
            raise ValidationError("ground_noise_amp must be >= 0")
        if self.ground_temp - self.ground_noise_amp < 0:
            raise ValidationError("ground_temp - ground_noise_amp must stay >= 0")
        for t in self.targets:
            hx, hy = t.half_extents()
            px, py = t.position
            if abs(px) + hx > ex / 2 or abs(py) + hy > ey / 2:
                raise ValidationError(f"target at {t.position} lies outside extent {self.extent}")
        if not (0 <= self.seed < 2 ** 64):
            raise ValidationError("seed must fit an unsigned 64-bit integer")


@dataclass
class Scene:
    """Generated world: the spec plus concrete occluder placements."""

    spec: SceneSpec
    occ_x: np.ndarray
    occ_y: np.ndarray
    occ_z: np.ndarray
    occ_r: np.ndarray

    @property
    def n_occluders(self) -> int:
        return len(self.occ_x)

    @property
    def max_surface_height(self) -> float:
        m = max((t.height for t in self.spec.targets), default=0.0)
        if self.n_occluders:
            m = max(m, float(self.occ_z.max()))
        return m


def generate_scene(spec: SceneSpec) -> Scene:
    """Place occluders by a seeded Poisson process; same spec -> identical scene."""
    ex, ey = spec.extent
    rng = np.random.default_rng(spec.seed)
    occ = spec.occluders
    n = int(rng.poisson(occ.density * ex * ey)) if occ.density > 0 else 0
    x = rng.uniform(-ex / 2, ex / 2, n)
    y = rng.uniform(-ey / 2, ey / 2, n)
    hm, hj = occ.crown_height
    z = rng.uniform(hm - hj, hm + hj, n) if hj > 0 else np.full(n, hm)
    rm, rj = occ.crown_radius
    r = rng.uniform(rm - rj, rm + rj, n) if rj > 0 else np.full(n, rm)
    return Scene(spec=spec, occ_x=x, occ_y=y, occ_z=z, occ_r=r)


def scene_dynamic_range(scene: Scene) -> float:
    """Span of radiances present in the world (noise extremes included)."""
    spec = scene.spec
    vals = [spec.ground_temp - spec.ground_noise_amp,
            spec.ground_temp + spec.ground_noise_amp,
            spec.occluders.temp]
    vals += [t.temp for t in spec.targets]
    return max(vals) - min(vals)


# ---------------------------------------------------------------------------
# deterministic value noise (ground texture)
# ---------------------------------------------------------------------------

_U = np.uint64


def _hash01(ix: np.ndarray, iy: np.ndarray, salt: int) -> np.ndarray:
    """Map integer lattice coordinates to uniform [0, 1) via a splitmix-style mix."""
    with np.errstate(over="ignore"):
        z = (ix.astype(np.uint64) * _U(0x9E3779B97F4A7C15)
             + iy.astype(np.uint64) * _U(0xC2B2AE3D27D4EB4F)
             + _U(salt & 0xFFFFFFFFFFFFFFFF) * _U(0xD6E8FEB86659FD93))
        z = z ^ (z >> _U(30))
        z = z * _U(0xBF58476D1CE4E5B9)
        z = z ^ (z >> _U(27))
        z = z * _U(0x94D049BB133111EB)
        z = z ^ (z >> _U(31))
    return (z >> _U(11)).astype(np.float64) * (1.0 / (1 << 53))


def _value_noise(x: np.ndarray, y: np.ndarray, scale: float, salt: int) -> np.ndarray:
    """Smooth lattice noise in [-1, 1], a pure function of world position and salt."""
    gx = x / scale
    gy = y / scale
    ix = np.floor(gx).astype(np.int64)
    iy = np.floor(gy).astype(np.int64)
    fx = gx - ix
    fy = gy - iy
    # quintic fade keeps the texture C2-smooth for stable sub-pixel matching
    wx = fx * fx * fx * (fx * (fx * 6 - 15) + 10)
    wy = fy * fy * fy * (fy * (fy * 6 - 15) + 10)
    h00 = _hash01(ix, iy, salt)
    h10 = _hash01(ix + 1, iy, salt)
    h01 = _hash01(ix, iy + 1, salt)
    h11 = _hash01(ix + 1, iy + 1, salt)
    top = h00 + (h10 - h00) * wx
    bot = h01 + (h11 - h01) * wx
    return 2.0 * (top + (bot - top) * wy) - 1.0


def _ground_radiance(spec: SceneSpec, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    shape = np.broadcast_shapes(x.shape, y.shape)
    base = np.full(shape, spec.ground_temp, dtype=np.float64)
    if spec.ground_noise_amp > 0:
        n = (0.7 * _value_noise(x, y, 0.6, spec.seed ^ 0x517CC1B7)
             + 0.3 * _value_noise(x, y, 2.7, spec.seed ^ 0x2545F491))
        base += spec.ground_noise_amp * n
    return base


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------

def render_frame(scene: Scene, pose: Pose, intrinsics: CameraIntrinsics) -> Frame:
    """Ray-cast one nadir frame; each pixel takes the radiance of the first hit.

    Surfaces are horizontal, so painting ground, then targets and occluders in
    ascending height order is exact first-hit resolution.
    """
    if pose.z <= scene.max_surface_height:
        raise ValidationError(
            f"pose altitude {pose.z} must exceed the highest scene surface "
            f"({scene.max_surface_height})")
    f_px = intrinsics.f_px
    dx = (np.arange(intrinsics.width) - intrinsics.cx) / f_px
    dy = (np.arange(intrinsics.height) - intrinsics.cy) / f_px

    # ground intersections; (1, W) x (H, 1) grids broadcast inside the noise
    gx = pose.x + dx[None, :] * pose.z
    gy = pose.y + dy[:, None] * pose.z
    img = _ground_radiance(scene.spec, gx, gy)

    # paint elevated surfaces from lowest to highest; the last paint wins,
    # which is exactly the nearest-surface-along-the-ray rule for nadir views
    surfaces: list[tuple[float, str, int]] = []
    for k, t in enumerate(scene.spec.targets):
        if t.height > 0:
            surfaces.append((t.height, "target", k))
        else:
            surfaces.append((0.0, "target", k))
    for k in range(scene.n_occluders):
        surfaces.append((float(scene.occ_z[k]), "occluder", k))
    surfaces.sort(key=lambda s: (s[0], s[1], s[2]))

    for height, kind, k in surfaces:
        depth = pose.z - height
        if kind == "target":
            t = scene.spec.targets[k]
            hx, hy = t.half_extents()
            px, py = t.position
            sl = _pixel_bbox(px, py, hx, hy, pose, depth, intrinsics)
            if sl is None:
                continue
            rows, cols = sl
            sx = pose.x + dx[cols][None, :] * depth
            sy = pose.y + dy[rows][:, None] * depth
            mask = t.contains(sx, sy)
            img[rows.reshape(-1, 1), cols.reshape(1, -1)] = np.where(
                mask, t.temp, img[rows.reshape(-1, 1), cols.reshape(1, -1)])
        else:
            ox, oy = float(scene.occ_x[k]), float(scene.occ_y[k])
            r = float(scene.occ_r[k])
            sl = _pixel_bbox(ox, oy, r, r, pose, depth, intrinsics)
            if sl is None:
                continue
            rows, cols = sl
            sx = pose.x + dx[cols][None, :] * depth
            sy = pose.y + dy[rows][:, None] * depth
            mask = (sx - ox) ** 2 + (sy - oy) ** 2 <= r * r
            img[rows.reshape(-1, 1), cols.reshape(1, -1)] = np.where(
                mask, scene.spec.occluders.temp,
                img[rows.reshape(-1, 1), cols.reshape(1, -1)])

    return Frame(image=img.astype(np.float32), pose=pose, intrinsics=intrinsics)


def _pixel_bbox(cx_w, cy_w, hx, hy, pose, depth, intr):
    """Pixel-index ranges covering a world box at the given ray depth, or None."""
    f_px = intr.f_px
    i_lo = int(math.floor(intr.cx + f_px * (cx_w - hx - pose.x) / depth))
    i_hi = int(math.ceil(intr.cx + f_px * (cx_w + hx - pose.x) / depth))
    j_lo = int(math.floor(intr.cy + f_px * (cy_w - hy - pose.y) / depth))
    j_hi = int(math.ceil(intr.cy + f_px * (cy_w + hy - pose.y) / depth))
    i_lo = max(i_lo, 0)
    j_lo = max(j_lo, 0)
    i_hi = min(i_hi, intr.width - 1)
    j_hi = min(j_hi, intr.height - 1)
    if i_lo > i_hi or j_lo > j_hi:
        return None
    return np.arange(j_lo, j_hi + 1), np.arange(i_lo, i_hi + 1)


def render_scan(scene: Scene, path: ScanPath, intrinsics: CameraIntrinsics) -> ScanStack:
    """Render floor(length/spacing)+1 frames along the path (29 for 14 m at 0.5 m)."""
    xs = path.positions()
    if len(xs) == 0:
        raise ValidationError("empty scan path")
    frames = [render_frame(scene, Pose(float(x), path.y, path.altitude), intrinsics)
              for x in xs]
    return ScanStack(frames)


# ---------------------------------------------------------------------------
# ground truth
# ---------------------------------------------------------------------------

def ground_truth_visibility(scene: Scene, pose: Pose, target_index: int,
                            grid: int = 24) -> float:
    """Fraction of the target's top surface with clear line of sight to the camera.

    Samples a regular grid on the top surface and intersects each sample->camera
    segment with every crown disc lying between the target top and the camera.
    """
    if not (0 <= target_index < len(scene.spec.targets)):
        raise ValidationError(f"target index {target_index} out of range")
    t = scene.spec.targets[target_index]
    hx, hy = t.half_extents()
    px, py = t.position
    u = (np.arange(grid) + 0.5) / grid * 2 - 1
    sx, sy = np.meshgrid(px + u * hx, py + u * hy)
    keep = t.contains(sx, sy)
    sx = sx[keep]
    sy = sy[keep]
    if sx.size == 0:
        return 1.0
    if scene.n_occluders == 0:
        return 1.0

    relevant = scene.occ_z > t.height
    oz = scene.occ_z[relevant]
    ox = scene.occ_x[relevant]
    oy = scene.occ_y[relevant]
    orad = scene.occ_r[relevant]
    if oz.size == 0:
        return 1.0
    # parameter along the segment where it crosses each crown plane
    s = (oz[None, :] - t.height) / (pose.z - t.height)
    cxp = sx[:, None] + (pose.x - sx[:, None]) * s
    cyp = sy[:, None] + (pose.y - sy[:, None]) * s
    blocked = ((cxp - ox[None, :]) ** 2 + (cyp - oy[None, :]) ** 2
               <= orad[None, :] ** 2).any(axis=1)
    return float(1.0 - blocked.mean())


# ---------------------------------------------------------------------------
# presets mirroring the four field scenes
# ---------------------------------------------------------------------------

DEFAULT_PATH = ScanPath()
DEFAULT_INTRINSICS = CameraIntrinsics()
PRESET_NAMES = (1, 2, 3, 4)

_STANDING = TargetSpec(position=(0.8, 0.5), height=1.8, footprint=0.28, temp=37.0)
_LYING = TargetSpec(position=(-1.2, -0.8), height=0.3, footprint=(0.9, 0.25), temp=37.0)
_ARMS_OUT = TargetSpec(position=(0.8, 0.5), height=1.8, footprint=(0.9, 0.3), temp=37.0)
_ARTIFICIAL = TargetSpec(position=(-1.5, 0.7), height=0.3, footprint=0.28, temp=37.0)

_NO_CANOPY = OccluderLayerSpec(density=0.0, crown_height=(21.0, 1.5),
                               crown_radius=(0.3, 0.1), temp=20.0)


def _canopy(density: float) -> OccluderLayerSpec:
    # the canopy is modeled as foliage clumps: many small opaque discs at
    # crown height, so occlusion varies at sub-meter scale as real foliage does
    return OccluderLayerSpec(density=density, crown_height=(21.0, 1.5),
                             crown_radius=(0.3, 0.1), temp=20.0)


def scene_preset(number: int, seed: int = 0) -> SceneSpec:
    """The four default worlds: open field, forest, dense forest, sparse forest.

    1: no occluders, standing (1.8 m) + lying (0.3 m) person
    2: forest, one standing person with outstretched arms
    3: dense forest, standing + lying person
    4: sparse forest, standing person + 0.3 m artificial object of similar
       footprint and temperature
    """
    base = dict(extent=(50.0, 30.0), ground_temp=30.0, ground_noise_amp=1.5, seed=seed)
    if number == 1:
        return SceneSpec(targets=(_STANDING, _LYING), occluders=_NO_CANOPY, **base)
    if number == 2:
        return SceneSpec(targets=(_ARMS_OUT,), occluders=_canopy(0.7), **base)
    if number == 3:
        return SceneSpec(targets=(_STANDING, _LYING), occluders=_canopy(1.0), **base)
    if number == 4:
        return SceneSpec(targets=(_STANDING, _ARTIFICIAL), occluders=_canopy(0.35), **base)
    raise ValidationError(f"unknown scene preset {number}; choose one of {PRESET_NAMES}")
