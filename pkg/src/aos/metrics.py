"""Quantitative oracles: block-matched disparity, contrast, binocular rivalry,
occlusion suppression, parameter sweeps and a plane-sweep depth demonstrator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import MissingGroundTruth, ValidationError, WindowError
from .integral import IntegralImage, StereoPair, integrate, stereo_pair, IntegralParams
from .scene import ScanStack, Scene, scene_dynamic_range

__all__ = [
    "DisparityMeasurement",
    "SweepGrid",
    "DepthMap",
    "measured_disparity",
    "region_around",
    "contrast_metric",
    "rivalry_score",
    "occlusion_suppression_score",
    "target_footprint_mask",
    "parameter_sweep",
    "plane_sweep_depth",
    "SWEEP_METRICS",
]


# ---------------------------------------------------------------------------
# disparity via 1D block matching
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DisparityMeasurement:
    """Signed sub-pixel disparity (right minus left) with an NCC confidence.

    disparity_px is the horizontal position of the matched content in the
    right eye minus its position in the left eye, so elevated targets
    (crossed disparity) come out negative. NaN with confidence 0 marks a
    textureless region. disparity_arcmin is the capture-side visual angle
    (disparity_px / f_px, converted).
    """

    disparity_px: float
    disparity_arcmin: float
    confidence: float
    region: tuple[int, int, int, int]

    @property
    def defined(self) -> bool:
        return self.confidence > 0 and math.isfinite(self.disparity_px)


def region_around(x: int, y: int, size: int = 21) -> tuple[int, int, int, int]:
    """Square matching region (x0, y0, w, h) centered on a pixel."""
    half = size // 2
    return (x - half, y - half, size, size)


def measured_disparity(pair: StereoPair, region: tuple[int, int, int, int],
                       max_offset: int = 32) -> DisparityMeasurement:
    """1D horizontal block matching with parabolic sub-pixel refinement.

    Correlates the left-eye region against horizontally shifted right-eye
    windows using zero-mean normalized cross-correlation. The returned
    disparity is right-minus-left; confidence is the peak NCC clamped to
    [0, 1], and 0 flags an unusable (textureless) region.
    """
    x0, y0, w, h = region
    left = pair.left.image
    right = pair.right.image
    hh, ww = left.shape
    if not (0 <= x0 and 0 <= y0 and x0 + w <= ww and y0 + h <= hh and w > 0 and h > 0):
        raise ValidationError(f"region {region} not within {ww}x{hh} images")
    template = left[y0:y0 + h, x0:x0 + w]
    if np.isnan(template).any():
        template = np.where(np.isnan(template), np.nanmean(template), template)
    t_mean = template.mean()
    t_zm = template - t_mean
    t_norm = math.sqrt(float((t_zm * t_zm).sum()))
    if t_norm < 1e-9:
        return DisparityMeasurement(math.nan, math.nan, 0.0, region)

    lo = max(-max_offset, -x0)
    hi = min(max_offset, ww - w - x0)
    if hi < lo:
        return DisparityMeasurement(math.nan, math.nan, 0.0, region)
    offsets = np.arange(lo, hi + 1)
    scores = np.full(len(offsets), -np.inf)
    for i, t in enumerate(offsets):
        window = right[y0:y0 + h, x0 + t:x0 + t + w]
        if np.isnan(window).any():
            window = np.where(np.isnan(window), np.nanmean(window), window)
        w_zm = window - window.mean()
        w_norm = math.sqrt(float((w_zm * w_zm).sum()))
        if w_norm < 1e-9:
            continue
        scores[i] = float((t_zm * w_zm).sum()) / (t_norm * w_norm)
    best = int(np.argmax(scores))
    if not np.isfinite(scores[best]):
        return DisparityMeasurement(math.nan, math.nan, 0.0, region)

    d = float(offsets[best])
    if 0 < best < len(offsets) - 1 and np.isfinite(scores[best - 1]) \
            and np.isfinite(scores[best + 1]):
        c0, c1, c2 = scores[best - 1], scores[best], scores[best + 1]
        denom = c0 - 2 * c1 + c2
        if denom < -1e-12:
            d += 0.5 * (c0 - c2) / denom
    conf = float(np.clip(scores[best], 0.0, 1.0))
    arcmin = 2.0 * math.atan(d / pair.intrinsics.f_px / 2.0) * 3437.75
    return DisparityMeasurement(d, arcmin, conf, region)


# ---------------------------------------------------------------------------
# contrast
# ---------------------------------------------------------------------------

def contrast_metric(image: np.ndarray | IntegralImage,
                    region: tuple[int, int, int, int] | None = None) -> dict:
    """Michelson (max-min)/(max+min) and RMS (standard deviation) contrast.

    Michelson is NaN when max+min == 0 (undefined for an all-zero region).
    """
    arr = image.image if isinstance(image, IntegralImage) else image
    if region is not None:
        x0, y0, w, h = region
        arr = arr[y0:y0 + h, x0:x0 + w]
    vals = arr[np.isfinite(arr)]
    if vals.size == 0:
        raise ValidationError("contrast region is empty")
    vmax = float(vals.max())
    vmin = float(vals.min())
    rms = float(vals.std())
    michelson = (vmax - vmin) / (vmax + vmin) if (vmax + vmin) != 0 else math.nan
    return {"michelson": michelson, "rms": rms}


# ---------------------------------------------------------------------------
# binocular rivalry
# ---------------------------------------------------------------------------

def rivalry_score(pair: StereoPair, ground_radiance: float = 30.0,
                  occluder_radiance: float = 20.0,
                  dynamic_range: float | None = None) -> float:
    """Mean |left - right| over occlusion-residue pixels, / dynamic range.

    The pair is already ground-registered (zero disparity on the focal
    plane), so the per-pixel difference isolates view-dependent residue.
    Only pixels whose value sits closer to the occluder radiance than to the
    ground radiance (in either eye) count; with no such pixels the score is 0.
    """
    left = pair.left.image
    right = pair.right.image
    common = np.isfinite(left) & np.isfinite(right)
    occ_like = (np.abs(left - occluder_radiance) < np.abs(left - ground_radiance)) | \
               (np.abs(right - occluder_radiance) < np.abs(right - ground_radiance))
    mask = common & occ_like
    if not mask.any():
        return 0.0
    if dynamic_range is None:
        lo = min(float(np.nanmin(left)), float(np.nanmin(right)))
        hi = max(float(np.nanmax(left)), float(np.nanmax(right)))
        dynamic_range = hi - lo
    if dynamic_range <= 0:
        return 0.0
    return float(np.abs(left - right)[mask].mean() / dynamic_range)


# ---------------------------------------------------------------------------
# occlusion suppression
# ---------------------------------------------------------------------------

def target_footprint_mask(integral: IntegralImage, scene: Scene,
                          target_index: int) -> np.ndarray:
    """Pixels of the integral grid that see the target's top surface."""
    t = scene.spec.targets[target_index]
    intr = integral.intrinsics
    depth = integral.altitude - t.height
    if depth <= 0:
        raise ValidationError("target reaches the camera altitude")
    dx = (np.arange(intr.width) - intr.cx) / intr.f_px
    dy = (np.arange(intr.height) - intr.cy) / intr.f_px
    sx = integral.params.anchor + dx[None, :] * depth
    sy = dy[:, None] * depth
    return np.broadcast_to(t.contains(sx, sy), (intr.height, intr.width))


def occlusion_suppression_score(integral: IntegralImage, scene: Scene | None,
                                target_index: int = 0) -> float:
    """Fraction of target-footprint pixels closer to target than occluder radiance."""
    if scene is None:
        raise MissingGroundTruth(
            "occlusion suppression needs simulated ground truth; imported "
            "stacks without a scene file are not supported")
    if not (0 <= target_index < len(scene.spec.targets)):
        raise ValidationError(f"target index {target_index} out of range")
    t = scene.spec.targets[target_index]
    occ_t = scene.spec.occluders.temp
    mask = target_footprint_mask(integral, scene, target_index)
    vals = integral.image[mask]
    vals = vals[np.isfinite(vals)]
    if vals.size == 0:
        raise ValidationError("target footprint is not covered by the integral")
    return float((np.abs(vals - t.temp) < np.abs(vals - occ_t)).mean())


# ---------------------------------------------------------------------------
# parameter sweep
# ---------------------------------------------------------------------------

SWEEP_METRICS = ("confidence", "rivalry", "suppression", "composite")


@dataclass
class SweepGrid:
    """Metric scores over a (baseline, aperture) grid; NaN marks infeasible cells."""

    ef_values: np.ndarray
    a_values: np.ndarray
    scores: np.ndarray       # shape (len(ef_values), len(a_values))
    feasible: np.ndarray     # same shape, bool
    metric: str


def _target_region(stack: ScanStack, scene: Scene, target_index: int, u: float,
                   min_size: int = 21) -> tuple[int, int, int, int]:
    t = scene.spec.targets[target_index]
    intr = stack.intrinsics
    depth = stack.altitude - t.height
    hx, hy = t.half_extents()
    cx_px = intr.cx + intr.f_px * (t.position[0] - u) / depth
    cy_px = intr.cy + intr.f_px * (t.position[1] - stack.y) / depth
    w = max(min_size, int(math.ceil(2 * hx * intr.f_px / depth)) + 8)
    h = max(min_size, int(math.ceil(2 * hy * intr.f_px / depth)) + 8)
    x0 = int(round(cx_px)) - w // 2
    y0 = int(round(cy_px)) - h // 2
    x0 = max(0, min(x0, intr.width - w))
    y0 = max(0, min(y0, intr.height - h))
    return (x0, y0, w, h)


def _cell_score(stack: ScanStack, scene: Scene | None, target_index: int,
                metric: str, u: float, e_f: float, a: float, h: float) -> float:
    if metric in ("confidence", "rivalry", "composite"):
        pair = stereo_pair(stack, u=u, e_f=e_f, a=a, h=h)
    if metric in ("suppression", "composite"):
        central = integrate(stack, IntegralParams(viewpoint=u, aperture=a,
                                                  focal_distance=h))
        suppression = occlusion_suppression_score(central, scene, target_index)
        if metric == "suppression":
            return suppression
    if metric in ("confidence", "composite"):
        if scene is None:
            raise MissingGroundTruth("confidence sweeps need a target region "
                                     "from simulated ground truth")
        region = _target_region(stack, scene, target_index, u)
        meas = measured_disparity(pair, region)
        if metric == "confidence":
            return meas.confidence
    if metric == "rivalry":
        return _rivalry_from_scene(pair, scene)
    # composite detectability proxy: suppression * confidence / (1 + rivalry)
    rivalry = _rivalry_from_scene(pair, scene)
    return suppression * meas.confidence / (1.0 + rivalry)


def _rivalry_from_scene(pair: StereoPair, scene: Scene | None) -> float:
    if scene is None:
        return rivalry_score(pair)
    return rivalry_score(pair, ground_radiance=scene.spec.ground_temp,
                         occluder_radiance=scene.spec.occluders.temp,
                         dynamic_range=scene_dynamic_range(scene))


def parameter_sweep(stack: ScanStack, metric: str, ef_values, a_values,
                    scene: Scene | None = None, target_index: int = 0,
                    h: float | None = None, u: float | None = None) -> SweepGrid:
    """Evaluate a metric per (e_f, a) cell; cells with e_f + a > path length
    are marked infeasible rather than evaluated."""
    if metric not in SWEEP_METRICS:
        raise ValidationError(f"unknown sweep metric {metric!r}; choose from {SWEEP_METRICS}")
    ef_values = np.atleast_1d(np.asarray(ef_values, dtype=float))
    a_values = np.atleast_1d(np.asarray(a_values, dtype=float))
    if ef_values.size == 0 or a_values.size == 0:
        raise ValidationError("sweep grids must be non-empty")
    if u is None:
        u = (stack.x_min + stack.x_max) / 2.0
    if h is None:
        h = stack.altitude
    length = stack.path_length
    scores = np.full((len(ef_values), len(a_values)), np.nan)
    feasible = np.zeros_like(scores, dtype=bool)
    for i, e_f in enumerate(ef_values):
        for j, a in enumerate(a_values):
            if e_f + a > length + 1e-9:
                continue
            try:
                scores[i, j] = _cell_score(stack, scene, target_index, metric,
                                           u, float(e_f), float(a), h)
            except WindowError:
                # eye windows that fall between sampled poses are unrealizable
                continue
            feasible[i, j] = True
    return SweepGrid(ef_values=ef_values, a_values=a_values, scores=scores,
                     feasible=feasible, metric=metric)


# ---------------------------------------------------------------------------
# plane-sweep depth
# ---------------------------------------------------------------------------

@dataclass
class DepthMap:
    """Winner-take-all depth per pixel with its photo-consistency score."""

    depth: np.ndarray
    score: np.ndarray     # 1 / (1 + variance at the winning depth)
    valid: np.ndarray
    depths: np.ndarray    # hypotheses that were swept
    viewpoint: float


def plane_sweep_depth(stack: ScanStack, depth_range: tuple[float, float],
                      step: float, min_coverage: int = 3) -> DepthMap:
    """Sweep plane hypotheses and keep the most photo-consistent depth per pixel.

    For each hypothesis all frames are registered to that plane (anchored at
    the central viewpoint) and the across-frame variance is the inconsistency
    measure; the winning depth minimizes it. Pixels covered by fewer than
    min_coverage frames at a hypothesis are skipped for that hypothesis.
    """
    if len(stack) < 3:
        raise ValidationError("plane sweep needs at least 3 frames")
    d_lo, d_hi = depth_range
    if not (0 < d_lo <= d_hi <= stack.altitude) or step <= 0:
        raise ValidationError(
            f"degenerate depth range {depth_range} (step {step}); must lie in "
            f"(0, {stack.altitude}] with positive step")
    depths = np.arange(d_lo, d_hi + step / 2, step)
    u = (stack.x_min + stack.x_max) / 2.0
    f_px = stack.intrinsics.f_px
    shape = (stack.intrinsics.height, stack.intrinsics.width)

    best_var = np.full(shape, np.inf)
    best_depth = np.full(shape, np.nan)
    any_valid = np.zeros(shape, dtype=bool)
    from .integral import _shift_sample
    for d in depths:
        total = np.zeros(shape)
        total_sq = np.zeros(shape)
        count = np.zeros(shape, dtype=np.int32)
        for frame in stack.frames:
            shift = f_px * (u - frame.pose.x) / d
            warped, cov = _shift_sample(frame.image, shift)
            vals = np.where(cov, warped, 0.0)
            total += vals
            total_sq += vals * vals
            count += cov
        ok = count >= min_coverage
        n = np.maximum(count, 1)
        mean = total / n
        var = np.maximum(total_sq / n - mean * mean, 0.0)
        better = ok & (var < best_var)
        best_var[better] = var[better]
        best_depth[better] = d
        any_valid |= ok

    score = np.where(any_valid, 1.0 / (1.0 + best_var), 0.0)
    best_depth = np.where(any_valid, best_depth, d_lo)
    return DepthMap(depth=best_depth, score=score, valid=any_valid,
                    depths=depths, viewpoint=u)
