"""Stereoscopic depth-perception feasibility model.

Screen-space geometry for a viewer fusing a stereo pair on a display at
distance v with eye separation e:

    perceived distance   z = e*v / (e - d)
    disparity            d = e*(z - v) / z

Capture disparities (baseline e_f on the aperture line, focal plane at v_f)
are scaled to the display by v_d*tan(FOV_d/2) / (v_f*tan(FOV_f/2)), the ratio
of the two image-plane half-widths. The perceived target height is
PTH = v_d - z_d, and the just-detectable depth interval for a stereo acuity
of d_gamma arcmin is

    JDDI = d_gamma * v_d**2 / (c*e_d + v_d),   c = 3437.75 arcmin/radian.

A target is reported depth-detectable when PTH >= JDDI and fusible when its
disparity gradient against the ground stays within the gradient limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ValidationError

__all__ = [
    "ARCMIN_PER_RADIAN",
    "CaptureGeometry",
    "DisplayModel",
    "ObserverModel",
    "PerceptionResult",
    "perceived_distance",
    "disparity",
    "angular_disparity_arcmin",
    "perceived_target_height",
    "jddi",
    "disparity_gradient",
    "feasibility_region",
    "results_to_csv",
    "FEASIBILITY_CSV_COLUMNS",
]

ARCMIN_PER_RADIAN = 3437.75


@dataclass(frozen=True)
class CaptureGeometry:
    """Synthetic-aperture capture: focal distance v_f, baseline e_f, FOV_f."""

    focal_distance: float = 26.0   # v_f, aperture plane -> focal plane (= h)
    baseline: float = 1.0          # e_f on the aperture line
    fov_deg: float = 61.0          # FOV_f, horizontal full angle
    target_height: float = 0.0     # h_t above the focal plane

    def __post_init__(self):
        if self.focal_distance <= 0:
            raise ValidationError("focal distance must be > 0")
        if self.baseline < 0:
            raise ValidationError("baseline must be >= 0")
        if not (0 < self.fov_deg < 180):
            raise ValidationError("capture FOV must be in (0, 180) degrees")
        if not (0 <= self.target_height < self.focal_distance):
            raise ValidationError("target height must satisfy 0 <= h_t < v_f")

    @property
    def target_distance(self) -> float:
        """z_f = v_f - h_t."""
        return self.focal_distance - self.target_height


@dataclass(frozen=True)
class DisplayModel:
    """Stereoscopic display: eye separation e_d, screen distance v_d, FOV_d.

    fov_deg is interpreted as the per-eye horizontal field of view (the
    headset datasheet quotes a diagonal value; see the README for the
    interpretation and how to override it).
    """

    eye_separation: float = 0.065
    screen_distance: float = 2.4852
    fov_deg: float = 68.0

    def __post_init__(self):
        if self.eye_separation <= 0:
            raise ValidationError("eye separation must be > 0")
        if self.screen_distance <= 0:
            raise ValidationError("screen distance must be > 0")
        if not (0 < self.fov_deg < 180):
            raise ValidationError("display FOV must be in (0, 180) degrees")


@dataclass(frozen=True)
class ObserverModel:
    """Stereo acuity (arcmin), disparity gradient limit, object separation."""

    stereo_acuity_arcmin: float = 6.0
    gradient_limit: float = 1.0
    separation_arcmin: float = 60.0

    def __post_init__(self):
        if self.stereo_acuity_arcmin < 0:
            raise ValidationError("stereo acuity must be >= 0")
        if self.gradient_limit <= 0:
            raise ValidationError("gradient limit must be > 0")
        if self.separation_arcmin <= 0:
            raise ValidationError("object separation must be > 0")


@dataclass(frozen=True)
class PerceptionResult:
    """Perceived geometry of one target at one baseline.

    Negative disparities are crossed (nearer than the screen). When the scaled
    disparity reaches the eye separation the point is pushed beyond infinity:
    beyond_infinity marks the entry and the distance/height fields are NaN.
    """

    target_height: float
    baseline: float
    disparity_m: float
    disparity_arcmin: float
    perceived_distance_m: float
    pth: float
    jddi: float
    gradient: float
    detectable: bool
    fusible: bool
    beyond_infinity: bool


def perceived_distance(e: float, v: float, d: float) -> float:
    """z = e*v / (e - d); requires d < e (otherwise beyond infinity)."""
    if d >= e:
        raise ValidationError(
            f"disparity {d} >= eye separation {e}: perceived beyond infinity")
    if d == 0.0:
        return v
    return e * v / (e - d)


def disparity(e: float, v: float, z: float) -> float:
    """d = e*(z - v)/z for an object perceived at distance z > 0."""
    if z <= 0:
        raise ValidationError(f"perceived distance must be > 0, got {z}")
    return e * (z - v) / z


def angular_disparity_arcmin(d: float, v: float) -> float:
    """On-display length to visual angle: 2*atan(d/(2v)) in arcmin."""
    return 2.0 * math.atan(d / (2.0 * v)) * ARCMIN_PER_RADIAN


def jddi(observer: ObserverModel, display: DisplayModel) -> float:
    """Just-detectable depth interval in meters (linear in the acuity)."""
    return (observer.stereo_acuity_arcmin * display.screen_distance ** 2
            / (ARCMIN_PER_RADIAN * display.eye_separation + display.screen_distance))


def disparity_gradient(d1_arcmin: float, d2_arcmin: float, separation_arcmin: float) -> float:
    """|d1 - d2| / separation, all in arcmin."""
    if separation_arcmin <= 0:
        raise ValidationError("object separation must be > 0")
    return abs(d1_arcmin - d2_arcmin) / separation_arcmin


def display_disparity(cap: CaptureGeometry, disp: DisplayModel, h_t: float) -> float:
    """Capture disparity of a target at height h_t, scaled to the display (m)."""
    if not (0 <= h_t < cap.focal_distance):
        raise ValidationError("target height must satisfy 0 <= h_t < v_f")
    z_f = cap.focal_distance - h_t
    d_f = cap.baseline * (z_f - cap.focal_distance) / z_f
    scale = ((disp.screen_distance * math.tan(math.radians(disp.fov_deg / 2)))
             / (cap.focal_distance * math.tan(math.radians(cap.fov_deg / 2))))
    return d_f * scale


def perceived_target_height(cap: CaptureGeometry, disp: DisplayModel,
                            h_t: float | None = None,
                            observer: ObserverModel | None = None) -> PerceptionResult:
    """Evaluate perceived distance, PTH and flags for one target height.

    The gradient is taken against the ground (zero disparity by construction,
    the focal plane sits on it) at the observer's object separation. Without
    an observer, jddi/gradient/flags default to NaN/False.
    """
    ht = cap.target_height if h_t is None else h_t
    d_d = display_disparity(cap, disp, ht)
    d_arcmin = angular_disparity_arcmin(d_d, disp.screen_distance)
    obs = observer
    j = jddi(obs, disp) if obs is not None else math.nan
    grad = (disparity_gradient(d_arcmin, 0.0, obs.separation_arcmin)
            if obs is not None else math.nan)
    if d_d >= disp.eye_separation:
        return PerceptionResult(
            target_height=ht, baseline=cap.baseline, disparity_m=d_d,
            disparity_arcmin=d_arcmin, perceived_distance_m=math.nan,
            pth=math.nan, jddi=j, gradient=grad,
            detectable=False, fusible=False, beyond_infinity=True)
    z_d = perceived_distance(disp.eye_separation, disp.screen_distance, d_d)
    pth = disp.screen_distance - z_d
    detectable = bool(obs is not None and pth >= j)
    fusible = bool(obs is not None and grad <= obs.gradient_limit)
    return PerceptionResult(
        target_height=ht, baseline=cap.baseline, disparity_m=d_d,
        disparity_arcmin=d_arcmin, perceived_distance_m=z_d, pth=pth,
        jddi=j, gradient=grad, detectable=detectable, fusible=fusible,
        beyond_infinity=False)


def feasibility_region(cap_template: CaptureGeometry, disp: DisplayModel,
                       observer: ObserverModel,
                       target_heights: list[float],
                       baselines: list[float]) -> list[PerceptionResult]:
    """Sweep (target, baseline) and collect PerceptionResults, never aborting.

    Non-fusible entries are carried as beyond_infinity markers so the table
    stays serializable.
    """
    if not target_heights or not len(baselines):
        raise ValidationError("feasibility sweep needs non-empty target and baseline grids")
    results = []
    for ht in target_heights:
        for e_f in baselines:
            cap = CaptureGeometry(focal_distance=cap_template.focal_distance,
                                  baseline=float(e_f), fov_deg=cap_template.fov_deg,
                                  target_height=float(ht))
            results.append(perceived_target_height(cap, disp, observer=observer))
    return results


FEASIBILITY_CSV_COLUMNS = ("target_h", "e_f", "d_display_m", "d_display_arcmin",
                           "gradient", "PTH_m", "JDDI_m", "detectable", "fusible")


def _fmt(x: float) -> str:
    if isinstance(x, float) and math.isnan(x):
        return ""
    return f"{x + 0.0:.6g}" if x == 0 else f"{x:.6g}"


def results_to_csv(results: list[PerceptionResult]) -> str:
    """Serialize a feasibility sweep; beyond-infinity rows carry empty cells."""
    lines = [",".join(FEASIBILITY_CSV_COLUMNS)]
    for r in results:
        lines.append(",".join([
            _fmt(r.target_height), _fmt(r.baseline), _fmt(r.disparity_m),
            _fmt(r.disparity_arcmin), _fmt(r.gradient), _fmt(r.pth),
            _fmt(r.jddi), str(r.detectable).lower(), str(r.fusible).lower(),
        ]))
    return "\n".join(lines) + "\n"
