"""HTTP service exposing loaded scan stacks and on-demand rendering.

Responses are pure functions of the loaded data and the (millimeter-
canonicalized) query parameters; an LRU cache memoizes rendered PNGs so
slider scrubbing stays responsive. Images share their encoding path with the
CLI, so service bytes equal CLI bytes for identical parameters.
"""

from __future__ import annotations

import hashlib
import threading
from collections import OrderedDict
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from . import stackio
from .errors import ValidationError, WindowError
from .integral import IntegralParams, integrate, stereo_pair, window_constraint
from .perception import (CaptureGeometry, DisplayModel, ObserverModel,
                         perceived_target_height)
from .scene import ScanStack, Scene

__all__ = ["create_app"]


def _q(value: float) -> float:
    """Canonicalize a length parameter at millimeter resolution."""
    return round(value * 1000.0) / 1000.0


class _LRUCache:
    def __init__(self, capacity: int):
        self.capacity = capacity
        self._items: OrderedDict[tuple, bytes] = OrderedDict()
        self._lock = threading.Lock()

    def get(self, key: tuple) -> bytes | None:
        with self._lock:
            if key not in self._items:
                return None
            self._items.move_to_end(key)
            return self._items[key]

    def put(self, key: tuple, value: bytes) -> None:
        with self._lock:
            self._items[key] = value
            self._items.move_to_end(key)
            while len(self._items) > self.capacity:
                self._items.popitem(last=False)


class SessionState:
    """Immutable loaded stacks plus the render cache."""

    def __init__(self, data_dir: Path, cache_size: int = 128):
        self.data_dir = Path(data_dir)
        self.stacks: dict[str, tuple[ScanStack, Scene | None]] = {}
        self.cache = _LRUCache(cache_size)
        if self.data_dir.is_dir():
            for child in sorted(self.data_dir.iterdir()):
                if child.is_dir() and (child / stackio.POSES_FILE).exists():
                    self.stacks[child.name] = stackio.load_stack(child)

    def meta(self, stack_id: str) -> dict:
        stack, scene = self.stacks[stack_id]
        return {
            "id": stack_id,
            "frames": len(stack),
            "x_min": stack.x_min,
            "x_max": stack.x_max,
            "path_length": stack.path_length,
            "spacing": stack.spacing,
            "altitude": stack.altitude,
            "fov_deg": stack.intrinsics.fov_deg,
            "width": stack.intrinsics.width,
            "height": stack.intrinsics.height,
            "has_ground_truth": scene is not None,
        }


def _error(status: int, message: str, constraint: str | None = None) -> JSONResponse:
    body: dict = {"error": message}
    if constraint is not None:
        body["constraint"] = constraint
    return JSONResponse(status_code=status, content=body)


def _png_response(data: bytes, key: tuple) -> Response:
    etag = hashlib.sha1(repr(key).encode()).hexdigest()
    return Response(content=data, media_type="image/png",
                    headers={"ETag": f'"{etag}"', "Cache-Control": "max-age=3600"})


def create_app(data_dir: str | Path, cache_size: int = 128,
               ui_dir: str | Path | None = None) -> FastAPI:
    state = SessionState(Path(data_dir), cache_size)
    app = FastAPI(title="aos viewer service")

    @app.exception_handler(RequestValidationError)
    async def _validation_handler(request: Request, exc: RequestValidationError):
        return _error(422, str(exc.errors()))

    @app.exception_handler(WindowError)
    async def _window_handler(request: Request, exc: WindowError):
        return _error(422, str(exc), exc.constraint)

    @app.exception_handler(ValidationError)
    async def _value_handler(request: Request, exc: ValidationError):
        return _error(422, str(exc))

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "stacks": len(state.stacks)}

    @app.get("/stacks")
    def list_stacks():
        return [state.meta(sid) for sid in state.stacks]

    @app.get("/stacks/{stack_id}/meta")
    def stack_meta(stack_id: str):
        if stack_id not in state.stacks:
            return _error(404, f"unknown stack {stack_id!r}")
        return state.meta(stack_id)

    @app.get("/stacks/{stack_id}/integral")
    def stack_integral(stack_id: str, u: float, a: float = 0.0, h: float | None = None):
        if stack_id not in state.stacks:
            return _error(404, f"unknown stack {stack_id!r}")
        stack, _ = state.stacks[stack_id]
        u, a = _q(u), _q(a)
        h = _q(h) if h is not None else stack.altitude
        key = (stack_id, "integral", u, a, h)
        cached = state.cache.get(key)
        if cached is None:
            integral = integrate(stack, IntegralParams(viewpoint=u, aperture=a,
                                                       focal_distance=h))
            cached = stackio.integral_png_bytes(integral)
            state.cache.put(key, cached)
        return _png_response(cached, key)

    @app.get("/stacks/{stack_id}/stereo")
    def stack_stereo(stack_id: str, u: float, a: float, ef: float,
                     h: float | None = None, mode: str = "sbs"):
        if stack_id not in state.stacks:
            return _error(404, f"unknown stack {stack_id!r}")
        stack, _ = state.stacks[stack_id]
        u, a, ef = _q(u), _q(a), _q(ef)
        h = _q(h) if h is not None else stack.altitude
        if ef + a > stack.path_length + 1e-9:
            raise WindowError(
                f"ef={ef:g} with a={a:g} exceeds the scanned path "
                f"({stack.path_length:g} m): {window_constraint(stack)}",
                constraint=window_constraint(stack))
        key = (stack_id, "stereo", u, a, ef, h, mode)
        cached = state.cache.get(key)
        if cached is None:
            pair = stereo_pair(stack, u=u, e_f=ef, a=a, h=h)
            cached = stackio.stereo_png_bytes(pair, mode)
            state.cache.put(key, cached)
        return _png_response(cached, key)

    @app.get("/perception")
    def perception(ht: float = 1.8, ef: float = 1.0, vf: float = 26.0,
                   fovf: float = 61.0, ed: float = 0.065, vd: float = 2.4852,
                   fovd: float = 68.0, dgamma: float = 6.0,
                   gradient_limit: float = 1.0, separation: float = 60.0):
        cap = CaptureGeometry(focal_distance=vf, baseline=ef, fov_deg=fovf,
                              target_height=ht)
        disp = DisplayModel(eye_separation=ed, screen_distance=vd, fov_deg=fovd)
        obs = ObserverModel(stereo_acuity_arcmin=dgamma,
                            gradient_limit=gradient_limit,
                            separation_arcmin=separation)
        r = perceived_target_height(cap, disp, observer=obs)
        return {
            "target_height": r.target_height,
            "baseline": r.baseline,
            "disparity_m": r.disparity_m,
            "disparity_arcmin": r.disparity_arcmin,
            "perceived_distance_m": None if r.beyond_infinity else r.perceived_distance_m,
            "pth": None if r.beyond_infinity else r.pth,
            "jddi": r.jddi,
            "gradient": r.gradient,
            "detectable": r.detectable,
            "fusible": r.fusible,
            "beyond_infinity": r.beyond_infinity,
        }

    if ui_dir is not None and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
