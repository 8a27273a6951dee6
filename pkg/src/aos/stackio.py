"""File formats: PNG frame stacks with pose sidecars, scene spec configs,
ground-truth JSON, provenance sidecars and CSV exports.

Radiance is stored in 16-bit grayscale PNGs as round(radiance * 100), so one
gray level is 0.01 radiance units. The poses sidecar holds one CSV line per
frame: index,x,y,z,fov_deg,width,height.
"""

from __future__ import annotations

import io
import json
import math
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ValidationError
from .integral import IntegralImage, StereoPair, compose_display
from .metrics import DepthMap, DisparityMeasurement, SweepGrid
from .scene import (CameraIntrinsics, Frame, OccluderLayerSpec, Pose, ScanStack,
                    Scene, SceneSpec, TargetSpec)

RADIANCE_SCALE = 100.0
POSES_FILE = "poses.txt"
TRUTH_FILE = "scene_truth.json"

__all__ = [
    "RADIANCE_SCALE",
    "fmt",
    "write_stack",
    "load_stack",
    "radiance_to_u16",
    "u16_to_radiance",
    "png_bytes",
    "integral_png_bytes",
    "stereo_png_bytes",
    "write_integral",
    "write_stereo",
    "write_depthmap",
    "sweep_to_csv",
    "disparity_to_csv",
    "parse_scene_spec",
    "format_scene_spec",
    "scene_to_json",
    "scene_from_json",
    "parse_keyvalues",
]


def fmt(x: float) -> str:
    """Fixed 6-significant-digit float formatting for stable golden files."""
    return f"{x + 0.0:.6g}" if x == 0 else f"{x:.6g}"


# ---------------------------------------------------------------------------
# PNG primitives
# ---------------------------------------------------------------------------

def radiance_to_u16(arr: np.ndarray) -> np.ndarray:
    vals = np.nan_to_num(arr, nan=0.0)
    return np.clip(np.round(vals * RADIANCE_SCALE), 0, 65535).astype(np.uint16)


def u16_to_radiance(arr: np.ndarray) -> np.ndarray:
    return (arr.astype(np.float32)) / np.float32(RADIANCE_SCALE)


def png_bytes(arr: np.ndarray) -> bytes:
    """Encode uint16 grayscale or uint8 RGB to PNG bytes."""
    if arr.dtype == np.uint16:
        img = Image.fromarray(arr)        # 16-bit grayscale (I;16)
    elif arr.dtype == np.uint8 and arr.ndim == 3:
        img = Image.fromarray(arr)        # RGB
    else:
        raise ValidationError(f"unsupported array for PNG export: {arr.dtype}, ndim={arr.ndim}")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def read_png_u16(path: Path) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img, dtype=np.uint16)


# ---------------------------------------------------------------------------
# scan stacks
# ---------------------------------------------------------------------------

def write_stack(directory: str | Path, stack: ScanStack,
                scene: Scene | None = None,
                spec_text: str | None = None) -> Path:
    """Write frames + poses sidecar (+ ground truth when simulated)."""
    directory = Path(directory)
    directory.mkdir(parents=False, exist_ok=True)
    lines = ["# index,x,y,z,fov_deg,width,height"]
    for i, frame in enumerate(stack.frames):
        name = f"frame_{i:04d}.png"
        (directory / name).write_bytes(png_bytes(radiance_to_u16(frame.image)))
        p, intr = frame.pose, frame.intrinsics
        lines.append(f"{i},{p.x!r},{p.y!r},{p.z!r},{intr.fov_deg!r},"
                     f"{intr.width},{intr.height}")
    (directory / POSES_FILE).write_text("\n".join(lines) + "\n")
    if scene is not None:
        (directory / TRUTH_FILE).write_text(scene_to_json(scene))
    if spec_text is not None:
        (directory / "scene.spec").write_text(spec_text)
    return directory


def load_stack(directory: str | Path) -> tuple[ScanStack, Scene | None]:
    """Load a stack in the export layout; ground truth is None for imports."""
    directory = Path(directory)
    poses_path = directory / POSES_FILE
    if not poses_path.exists():
        raise FileNotFoundError(f"no {POSES_FILE} in {directory}")
    frames = []
    for line in poses_path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        idx, x, y, z, fov, w, h = line.split(",")
        intr = CameraIntrinsics(fov_deg=float(fov), width=int(w), height=int(h))
        img = u16_to_radiance(read_png_u16(directory / f"frame_{int(idx):04d}.png"))
        frames.append(Frame(image=img, pose=Pose(float(x), float(y), float(z)),
                            intrinsics=intr))
    scene = None
    truth_path = directory / TRUTH_FILE
    if truth_path.exists():
        scene = scene_from_json(truth_path.read_text())
    return ScanStack(frames), scene


# ---------------------------------------------------------------------------
# integral / stereo / depth products
# ---------------------------------------------------------------------------

def integral_png_bytes(integral: IntegralImage) -> bytes:
    return png_bytes(radiance_to_u16(integral.image))


def stereo_png_bytes(pair: StereoPair, mode: str) -> bytes:
    composite = compose_display(pair, mode)
    if composite.dtype == np.uint8:
        return png_bytes(composite)
    return png_bytes(radiance_to_u16(composite))


def _provenance_lines(kind: str, integral: IntegralImage, extra: dict | None = None) -> str:
    p = integral.params
    lines = [
        f"kind = {kind}",
        f"u = {fmt(p.viewpoint)}",
        f"a = {fmt(p.aperture)}",
        f"h = {fmt(p.focal_distance)}",
        f"grid_viewpoint = {fmt(p.anchor)}",
        f"frame_count = {integral.frame_count}",
        "frame_indices = " + " ".join(str(i) for i in integral.frame_indices),
        f"radiance_scale = {fmt(RADIANCE_SCALE)}",
    ]
    for k, v in (extra or {}).items():
        lines.append(f"{k} = {v}")
    return "\n".join(lines) + "\n"


def write_integral(path: str | Path, integral: IntegralImage) -> None:
    path = Path(path)
    path.write_bytes(integral_png_bytes(integral))
    path.with_suffix(".meta").write_text(_provenance_lines("integral", integral))


def write_stereo(prefix: str | Path, pair: StereoPair,
                 formats: tuple[str, ...] = ("sbs", "anaglyph")) -> list[Path]:
    """Write left/right eyes plus the requested composites next to prefix."""
    prefix = Path(prefix)
    written = []
    for name, eye in (("left", pair.left), ("right", pair.right)):
        p = prefix.parent / f"{prefix.name}_{name}.png"
        p.write_bytes(integral_png_bytes(eye))
        written.append(p)
    for mode in formats:
        p = prefix.parent / f"{prefix.name}_{mode}.png"
        p.write_bytes(stereo_png_bytes(pair, mode))
        written.append(p)
    meta = prefix.parent / f"{prefix.name}.meta"
    meta.write_text(_provenance_lines(
        "stereo", pair.left,
        extra={"e_f": fmt(pair.baseline),
               "right_frame_indices": " ".join(str(i) for i in pair.right.frame_indices)}))
    written.append(meta)
    return written


def write_depthmap(path: str | Path, dm: DepthMap) -> None:
    """16-bit depth PNG; the sidecar documents the gray-level scaling."""
    path = Path(path)
    d_lo = float(dm.depths[0])
    d_hi = float(dm.depths[-1])
    span = d_hi - d_lo if d_hi > d_lo else 1.0
    gray = np.clip(np.round((dm.depth - d_lo) / span * 65535.0), 0, 65535)
    gray[~dm.valid] = 0
    path.write_bytes(png_bytes(gray.astype(np.uint16)))
    meta = [
        "kind = depthmap",
        f"# depth_m = depth_min + gray / 65535 * (depth_max - depth_min)",
        f"depth_min = {fmt(d_lo)}",
        f"depth_max = {fmt(d_hi)}",
        f"depth_step = {fmt(float(dm.depths[1] - dm.depths[0])) if len(dm.depths) > 1 else fmt(0.0)}",
        f"viewpoint = {fmt(dm.viewpoint)}",
    ]
    path.with_suffix(".meta").write_text("\n".join(meta) + "\n")


def sweep_to_csv(grid: SweepGrid) -> str:
    lines = ["metric,e_f,a,score,feasible"]
    for i, e_f in enumerate(grid.ef_values):
        for j, a in enumerate(grid.a_values):
            feasible = bool(grid.feasible[i, j])
            score = "" if not feasible else fmt(float(grid.scores[i, j]))
            lines.append(f"{grid.metric},{fmt(float(e_f))},{fmt(float(a))},"
                         f"{score},{str(feasible).lower()}")
    return "\n".join(lines) + "\n"


def disparity_to_csv(measurements: list[DisparityMeasurement]) -> str:
    lines = ["disparity_px,disparity_arcmin,confidence,x0,y0,w,h"]
    for m in measurements:
        d = "" if not m.defined else fmt(m.disparity_px)
        arc = "" if not m.defined else fmt(m.disparity_arcmin)
        x0, y0, w, h = m.region
        lines.append(f"{d},{arc},{fmt(m.confidence)},{x0},{y0},{w},{h}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# plain-text scene spec format (key = value, with [target] / [occluders] blocks)
# ---------------------------------------------------------------------------

def parse_keyvalues(text: str) -> dict:
    """Parse flat `key = value` lines (comments with #) into a dict of strings."""
    out: dict[str, str] = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line or line.startswith("["):
            continue
        if "=" not in line:
            raise ValidationError(f"bad config line: {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _floats(s: str) -> list[float]:
    return [float(tok) for tok in s.replace(",", " ").split()]


def parse_scene_spec(text: str) -> SceneSpec:
    """Parse the documented scene config (see format_scene_spec for the shape)."""
    sections: list[tuple[str, dict]] = [("scene", {})]
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            sections.append((line[1:-1].strip().lower(), {}))
            continue
        if "=" not in line:
            raise ValidationError(f"bad scene spec line: {raw!r}")
        key, value = line.split("=", 1)
        sections[-1][1][key.strip()] = value.strip()

    top = sections[0][1]
    targets = []
    occluders = OccluderLayerSpec()
    for name, kv in sections[1:]:
        if name == "target":
            fp = _floats(kv["footprint"])
            footprint = fp[0] if len(fp) == 1 else (fp[0], fp[1])
            pos = _floats(kv["position"])
            targets.append(TargetSpec(position=(pos[0], pos[1]),
                                      height=float(kv["height"]),
                                      footprint=footprint,
                                      temp=float(kv["temp"])))
        elif name == "occluders":
            ch = _floats(kv.get("crown_height", "21 1.5"))
            cr = _floats(kv.get("crown_radius", "1.8 0.7"))
            occluders = OccluderLayerSpec(
                density=float(kv.get("density", "0")),
                crown_height=(ch[0], ch[1] if len(ch) > 1 else 0.0),
                crown_radius=(cr[0], cr[1] if len(cr) > 1 else 0.0),
                temp=float(kv.get("temp", "20")))
        else:
            raise ValidationError(f"unknown scene spec section [{name}]")

    ext = _floats(top.get("extent", "50 30"))
    return SceneSpec(
        extent=(ext[0], ext[1] if len(ext) > 1 else ext[0]),
        ground_temp=float(top.get("ground_temp", "30")),
        ground_noise_amp=float(top.get("ground_noise_amp", "1.5")),
        targets=tuple(targets),
        occluders=occluders,
        seed=int(top.get("seed", "0")))


def format_scene_spec(spec: SceneSpec) -> str:
    lines = [
        "# scene spec",
        f"extent = {spec.extent[0]!r} {spec.extent[1]!r}",
        f"ground_temp = {spec.ground_temp!r}",
        f"ground_noise_amp = {spec.ground_noise_amp!r}",
        f"seed = {spec.seed}",
    ]
    for t in spec.targets:
        lines += ["", "[target]",
                  f"position = {t.position[0]!r} {t.position[1]!r}",
                  f"height = {t.height!r}"]
        if t.is_disc:
            lines.append(f"footprint = {float(t.footprint)!r}")
        else:
            lines.append(f"footprint = {t.footprint[0]!r} {t.footprint[1]!r}")
        lines.append(f"temp = {t.temp!r}")
    o = spec.occluders
    lines += ["", "[occluders]",
              f"density = {o.density!r}",
              f"crown_height = {o.crown_height[0]!r} {o.crown_height[1]!r}",
              f"crown_radius = {o.crown_radius[0]!r} {o.crown_radius[1]!r}",
              f"temp = {o.temp!r}"]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# scene ground truth JSON
# ---------------------------------------------------------------------------

def scene_to_json(scene: Scene) -> str:
    spec = scene.spec
    doc = {
        "spec": {
            "extent": list(spec.extent),
            "ground_temp": spec.ground_temp,
            "ground_noise_amp": spec.ground_noise_amp,
            "seed": spec.seed,
            "targets": [
                {"position": list(t.position), "height": t.height,
                 "footprint": (t.footprint if t.is_disc else list(t.footprint)),
                 "temp": t.temp}
                for t in spec.targets
            ],
            "occluders": {
                "density": spec.occluders.density,
                "crown_height": list(spec.occluders.crown_height),
                "crown_radius": list(spec.occluders.crown_radius),
                "temp": spec.occluders.temp,
            },
        },
        "occluder_discs": {
            "x": scene.occ_x.tolist(),
            "y": scene.occ_y.tolist(),
            "z": scene.occ_z.tolist(),
            "r": scene.occ_r.tolist(),
        },
    }
    return json.dumps(doc, indent=1)


def scene_from_json(text: str) -> Scene:
    doc = json.loads(text)
    s = doc["spec"]
    targets = tuple(
        TargetSpec(position=tuple(t["position"]), height=t["height"],
                   footprint=(t["footprint"] if isinstance(t["footprint"], (int, float))
                              else tuple(t["footprint"])),
                   temp=t["temp"])
        for t in s["targets"])
    occ = s["occluders"]
    spec = SceneSpec(extent=tuple(s["extent"]), ground_temp=s["ground_temp"],
                     ground_noise_amp=s["ground_noise_amp"], targets=targets,
                     occluders=OccluderLayerSpec(
                         density=occ["density"],
                         crown_height=tuple(occ["crown_height"]),
                         crown_radius=tuple(occ["crown_radius"]),
                         temp=occ["temp"]),
                     seed=s["seed"])
    discs = doc["occluder_discs"]
    return Scene(spec=spec,
                 occ_x=np.array(discs["x"]), occ_y=np.array(discs["y"]),
                 occ_z=np.array(discs["z"]), occ_r=np.array(discs["r"]))
