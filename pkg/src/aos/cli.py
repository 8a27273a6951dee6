"""Command-line entry point.

Subcommands: simulate, integrate, stereo, perception, sweep, planesweep,
serve. Exit codes: 0 success, 2 usage/validation, 3 I/O failure. Error lines
are prefixed "error:". Numeric parameters resolve as CLI flags > config file
> preset defaults.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import stackio
from .errors import MissingGroundTruth, ValidationError, WindowError
from .integral import IntegralParams, integrate, stereo_pair, window_constraint
from .metrics import parameter_sweep, plane_sweep_depth, SWEEP_METRICS
from .perception import (CaptureGeometry, DisplayModel, ObserverModel,
                         feasibility_region, results_to_csv)
from .scene import (DEFAULT_INTRINSICS, DEFAULT_PATH, CameraIntrinsics, ScanPath,
                    generate_scene, render_scan, scene_preset)
from .stackio import fmt

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3


def _fail(msg: str, code: int) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return code


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    text = Path(path).read_text()
    return stackio.parse_keyvalues(text)


def _resolve(args, config: dict, name: str, default, cast=float):
    """CLI flag beats config file beats default."""
    value = getattr(args, name, None)
    if value is not None:
        return value
    if name in config:
        return cast(config[name])
    return default


def _parse_grid(text: str) -> list[float]:
    """Comma list `0.5,1,2` or range `start:stop:step` (stop inclusive)."""
    if ":" in text:
        start, stop, step = (float(t) for t in text.split(":"))
        return list(np.arange(start, stop + step / 2, step))
    return [float(t) for t in text.split(",") if t.strip()]


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    config = _load_config(args.config)
    seed = int(_resolve(args, config, "seed", 0, int))
    if args.scene:
        spec_text = Path(args.scene).read_text()
        spec = stackio.parse_scene_spec(spec_text)
        if args.seed is not None:
            spec = replace(spec, seed=seed)
            spec_text = stackio.format_scene_spec(spec)
    else:
        preset = int(_resolve(args, config, "preset", 1, int))
        spec = scene_preset(preset, seed=seed)
        spec_text = stackio.format_scene_spec(spec)
    path = ScanPath(
        x_start=_resolve(args, config, "x_start", DEFAULT_PATH.x_start),
        length=_resolve(args, config, "length", DEFAULT_PATH.length),
        spacing=_resolve(args, config, "spacing", DEFAULT_PATH.spacing),
        altitude=_resolve(args, config, "altitude", DEFAULT_PATH.altitude))
    intr = CameraIntrinsics(
        fov_deg=_resolve(args, config, "fov", DEFAULT_INTRINSICS.fov_deg),
        width=int(_resolve(args, config, "width", DEFAULT_INTRINSICS.width, int)),
        height=int(_resolve(args, config, "height", DEFAULT_INTRINSICS.height, int)))
    scene = generate_scene(spec)
    stack = render_scan(scene, path, intr)
    out = Path(args.out)
    stackio.write_stack(out, stack, scene=scene, spec_text=spec_text)
    print(f"wrote {len(stack)} frames to {out}")
    return EXIT_OK


def cmd_integrate(args) -> int:
    config = _load_config(args.config)
    stack, _ = stackio.load_stack(args.stack)
    u = _resolve(args, config, "u", (stack.x_min + stack.x_max) / 2)
    a = _resolve(args, config, "a", 0.0)
    h = _resolve(args, config, "h", stack.altitude)
    integral = integrate(stack, IntegralParams(viewpoint=u, aperture=a, focal_distance=h))
    stackio.write_integral(Path(args.out), integral)
    print(f"integral u={fmt(u)} a={fmt(a)} h={fmt(h)} from "
          f"{integral.frame_count} frames -> {args.out}")
    return EXIT_OK


def cmd_stereo(args) -> int:
    config = _load_config(args.config)
    stack, _ = stackio.load_stack(args.stack)
    u = _resolve(args, config, "u", (stack.x_min + stack.x_max) / 2)
    a = _resolve(args, config, "a", 2.0)
    e_f = _resolve(args, config, "ef", 1.0)
    h = _resolve(args, config, "h", stack.altitude)
    if e_f + a > stack.path_length + 1e-9:
        raise WindowError(
            f"e_f={fmt(e_f)} with a={fmt(a)} exceeds the scanned path "
            f"({fmt(stack.path_length)} m): {window_constraint(stack)}",
            constraint=window_constraint(stack))
    pair = stereo_pair(stack, u=u, e_f=e_f, a=a, h=h)
    formats = tuple((args.format or "sbs,anaglyph").split(","))
    written = stackio.write_stereo(Path(args.out), pair, formats=formats)
    print(f"stereo u={fmt(u)} a={fmt(a)} ef={fmt(e_f)} h={fmt(h)} -> "
          + ", ".join(str(p) for p in written))
    return EXIT_OK


def cmd_perception(args) -> int:
    config = _load_config(args.config)
    disp = DisplayModel(
        eye_separation=_resolve(args, config, "ed", 0.065),
        screen_distance=_resolve(args, config, "vd", 2.4852),
        fov_deg=_resolve(args, config, "fovd", 68.0))
    observer = ObserverModel(
        stereo_acuity_arcmin=_resolve(args, config, "dgamma", 6.0),
        gradient_limit=_resolve(args, config, "gradient_limit", 1.0),
        separation_arcmin=_resolve(args, config, "separation", 60.0))
    cap = CaptureGeometry(
        focal_distance=_resolve(args, config, "vf", 26.0),
        fov_deg=_resolve(args, config, "fovf", 61.0))
    targets = ([float(t) for t in args.targets.split(",")]
               if args.targets else [0.3, 1.8, 21.0])
    baselines = _parse_grid(args.grid_ef or "0:5:0.1")
    results = feasibility_region(cap, disp, observer, targets, baselines)
    csv_text = results_to_csv(results)
    Path(args.out).write_text(csv_text)
    if args.summary:
        for ht in targets:
            rows = [r for r in results if r.target_height == ht]
            ok = [r for r in rows if r.detectable and r.fusible]
            if ok:
                lo = min(r.baseline for r in ok)
                hi = max(r.baseline for r in ok)
                print(f"target {fmt(ht)} m: depth perceivable for "
                      f"e_f in [{fmt(lo)}, {fmt(hi)}] m")
            else:
                print(f"target {fmt(ht)} m: no detectable & fusible baseline in grid")
    print(f"wrote {len(results)} rows to {args.out}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = _load_config(args.config)
    stack, scene = stackio.load_stack(args.stack)
    ef_values = _parse_grid(args.grid_ef or "0.5,1,2,4")
    a_values = _parse_grid(args.grid_a or "0,1,2,4")
    h = _resolve(args, config, "h", stack.altitude)
    grid = parameter_sweep(stack, args.metric, ef_values, a_values,
                           scene=scene, target_index=args.target, h=h)
    Path(args.out).write_text(stackio.sweep_to_csv(grid))
    if np.isfinite(grid.scores).any():
        i, j = np.unravel_index(np.nanargmax(grid.scores), grid.scores.shape)
        print(f"best {grid.metric}: {fmt(float(grid.scores[i, j]))} at "
              f"e_f={fmt(float(grid.ef_values[i]))} a={fmt(float(grid.a_values[j]))}")
    print(f"wrote sweep to {args.out}")
    return EXIT_OK


def cmd_planesweep(args) -> int:
    config = _load_config(args.config)
    stack, _ = stackio.load_stack(args.stack)
    d_lo = _resolve(args, config, "dmin", stack.altitude - 4.0)
    d_hi = _resolve(args, config, "dmax", stack.altitude)
    step = _resolve(args, config, "step", 0.3)
    dm = plane_sweep_depth(stack, (d_lo, d_hi), step)
    stackio.write_depthmap(Path(args.out), dm)
    print(f"plane sweep over [{fmt(d_lo)}, {fmt(d_hi)}] m step {fmt(step)} -> {args.out}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import os

    import uvicorn

    from .service import create_app
    data_dir = args.data or os.environ.get("AOS_DATA_DIR", ".")
    port = args.port or int(os.environ.get("AOS_PORT", "8000"))
    app = create_app(Path(data_dir), ui_dir=args.ui_dir)
    uvicorn.run(app, host=args.host, port=port)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aos", description="synthetic-aperture stereo imaging toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key = value config file")

    p = sub.add_parser("simulate", help="render a simulated scan stack")
    common(p)
    p.add_argument("--preset", type=int, default=None, help="scene preset 1-4")
    p.add_argument("--scene", help="scene spec file (overrides --preset)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--x-start", dest="x_start", type=float, default=None)
    p.add_argument("--length", type=float, default=None)
    p.add_argument("--spacing", type=float, default=None)
    p.add_argument("--altitude", type=float, default=None)
    p.add_argument("--fov", type=float, default=None)
    p.add_argument("--width", type=int, default=None)
    p.add_argument("--height", type=int, default=None)
    p.add_argument("--out", required=True, help="output stack directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("integrate", help="compute an integral image")
    common(p)
    p.add_argument("--stack", required=True)
    p.add_argument("--u", type=float, default=None)
    p.add_argument("--a", type=float, default=None)
    p.add_argument("--h", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_integrate)

    p = sub.add_parser("stereo", help="compute a stereo integral pair")
    common(p)
    p.add_argument("--stack", required=True)
    p.add_argument("--u", type=float, default=None)
    p.add_argument("--a", type=float, default=None)
    p.add_argument("--ef", type=float, default=None)
    p.add_argument("--h", type=float, default=None)
    p.add_argument("--format", help="comma list: sbs,anaglyph")
    p.add_argument("--out", required=True, help="output path prefix")
    p.set_defaults(func=cmd_stereo)

    p = sub.add_parser("perception", help="perception feasibility CSV")
    common(p)
    p.add_argument("--targets", help="comma list of target heights (m)")
    p.add_argument("--grid-ef", dest="grid_ef", help="baseline grid: list or start:stop:step")
    p.add_argument("--vf", type=float, default=None)
    p.add_argument("--fovf", type=float, default=None)
    p.add_argument("--ed", type=float, default=None)
    p.add_argument("--vd", type=float, default=None)
    p.add_argument("--fovd", type=float, default=None)
    p.add_argument("--dgamma", type=float, default=None)
    p.add_argument("--gradient-limit", dest="gradient_limit", type=float, default=None)
    p.add_argument("--separation", type=float, default=None)
    p.add_argument("--summary", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_perception)

    p = sub.add_parser("sweep", help="metric over a (e_f, a) grid")
    common(p)
    p.add_argument("--stack", required=True)
    p.add_argument("--metric", choices=SWEEP_METRICS, default="composite")
    p.add_argument("--grid-ef", dest="grid_ef")
    p.add_argument("--grid-a", dest="grid_a")
    p.add_argument("--target", type=int, default=0)
    p.add_argument("--h", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("planesweep", help="plane-sweep depth map")
    common(p)
    p.add_argument("--stack", required=True)
    p.add_argument("--dmin", type=float, default=None)
    p.add_argument("--dmax", type=float, default=None)
    p.add_argument("--step", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_planesweep)

    p = sub.add_parser("serve", help="run the HTTP viewer service")
    p.add_argument("--data", help="stack data directory (or AOS_DATA_DIR)")
    p.add_argument("--port", type=int, default=None, help="port (or AOS_PORT)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--ui-dir", dest="ui_dir", help="static viewer bundle to serve at /")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, WindowError, MissingGroundTruth) as exc:
        return _fail(str(exc), EXIT_USAGE)
    except FileNotFoundError as exc:
        return _fail(str(exc), EXIT_IO)
    except OSError as exc:
        return _fail(str(exc), EXIT_IO)


if __name__ == "__main__":
    sys.exit(main())
