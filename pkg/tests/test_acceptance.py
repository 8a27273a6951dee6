"""Acceptance suite: one test per primary criterion, each printing a
PASS/FAIL line with the measured values (run with -s or -v to see them).

The heavy simulated inputs (full 640x512x29 stacks) are rendered once per
session and shared across criteria.
"""

import math
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from aos import stackio
from aos.cli import main as cli_main
from aos.integral import IntegralParams, integrate, stereo_pair
from aos.metrics import (measured_disparity, contrast_metric,
                         occlusion_suppression_score, parameter_sweep,
                         plane_sweep_depth, region_around, rivalry_score,
                         target_footprint_mask)
from aos.perception import (CaptureGeometry, DisplayModel, ObserverModel,
                            disparity, feasibility_region, jddi,
                            perceived_distance, perceived_target_height)
from aos.scene import (DEFAULT_INTRINSICS, CameraIntrinsics, Frame, Pose,
                       ScanPath, ScanStack, generate_scene, render_scan,
                       scene_dynamic_range, scene_preset)
from aos.service import create_app

H = 26.0
FPX = DEFAULT_INTRINSICS.f_px
DISPLAY = DisplayModel()
OBSERVER = ObserverModel()


def _report(name: str, detail: str):
    print(f"ACCEPTANCE {name}: PASS ({detail})")


# ---------------------------------------------------------------------------
# shared heavy fixtures
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def preset3_data():
    """Ten dense-preset stacks reduced to the metric curves the criteria use,
    plus the seed-0 stack for the plane-sweep and sweep-machinery criteria."""
    apertures = (0.0, 1.0, 2.0, 4.0)
    contrast_apertures = (1.0, 2.0, 4.0, 8.0, 14.0)
    baselines = (0.5, 1.0, 2.0, 4.0)
    viewpoints = (-4.0, -2.0, 0.0, 2.0, 4.0)
    sup = {a: [] for a in apertures}
    con = {a: [] for a in contrast_apertures}
    riv = {e: [] for e in baselines}
    first = None
    t_render = t_sup = t_con = t_riv = 0.0
    for seed in range(10):
        t0 = time.time()
        scene = generate_scene(scene_preset(3, seed=seed))
        stack = render_scan(scene, ScanPath(), DEFAULT_INTRINSICS)
        t_render += time.time() - t0
        if first is None:
            first = (stack, scene)
        dr = scene_dynamic_range(scene)

        t0 = time.time()
        for a in apertures:
            vals = [occlusion_suppression_score(
                        integrate(stack, IntegralParams(viewpoint=u, aperture=a,
                                                        focal_distance=H)),
                        scene, 0) for u in viewpoints]
            sup[a].append(float(np.mean(vals)))
        t_sup += time.time() - t0

        t0 = time.time()
        for a in contrast_apertures:
            ii = integrate(stack, IntegralParams(viewpoint=0.0, aperture=a,
                                                 focal_distance=H))
            con[a].append(contrast_metric(ii, (302, 232, 70, 70))["michelson"])
        t_con += time.time() - t0

        t0 = time.time()
        for e_f in baselines:
            pair = stereo_pair(stack, u=0.0, e_f=e_f, a=2.0, h=H)
            riv[e_f].append(rivalry_score(pair, scene.spec.ground_temp,
                                          scene.spec.occluders.temp, dr))
        t_riv += time.time() - t0
    return {
        "suppression": {a: float(np.mean(v)) for a, v in sup.items()},
        "contrast": {a: float(np.mean(v)) for a, v in con.items()},
        "rivalry": {e: float(np.mean(v)) for e, v in riv.items()},
        "seed0": first,
        "timings": {"render": t_render, "suppression": t_sup,
                    "contrast": t_con, "rivalry": t_riv},
    }


@pytest.fixture(scope="module")
def stack1_dir(stack1_full, tmp_path_factory):
    stack, scene = stack1_full
    out = tmp_path_factory.mktemp("accept") / "field"
    stackio.write_stack(out, stack, scene=scene)
    return out


# ---------------------------------------------------------------------------
# perception criteria
# ---------------------------------------------------------------------------

def test_eq1_eq2_inverse_roundtrip():
    t0 = time.time()
    e, v = DISPLAY.eye_separation, DISPLAY.screen_distance
    worst = 0.0
    for z in (0.5 * v, v, 2 * v, 10 * v):
        back = perceived_distance(e, v, disparity(e, v, z))
        worst = max(worst, abs(back - z) / z)
    assert worst <= 1e-12
    _report("eq1-eq2-roundtrip",
            f"max rel err {worst:.2e}, {1e3 * (time.time() - t0):.2f} ms")


def test_eq5_jddi_value_and_linearity():
    val = jddi(ObserverModel(stereo_acuity_arcmin=6.0), DISPLAY)
    # independent hand evaluation: 6 * 2.4852^2 / (3437.75*0.065 + 2.4852)
    assert val == pytest.approx(0.16401472273815557, rel=1e-12)
    assert val == pytest.approx(0.164, abs=5e-4)
    low = jddi(ObserverModel(stereo_acuity_arcmin=0.3), DISPLAY)
    assert val == 20.0 * low
    _report("eq5-jddi", f"JDDI(6')={val:.6f} m, jddi(6)==20*jddi(0.3) exact")


def test_twelve_arcmin_reproduction():
    cap = CaptureGeometry(focal_distance=26.0, baseline=1.0, fov_deg=61.0)
    standing = perceived_target_height(cap, DISPLAY, h_t=1.8)
    lying = perceived_target_height(cap, DISPLAY, h_t=0.3)
    diff = abs(standing.disparity_arcmin - lying.disparity_arcmin)
    # regression constant under the horizontal per-eye FOV_d reading
    assert diff == pytest.approx(9.494138291231735, rel=1e-9)
    assert 12.0 * 0.7 <= diff <= 12.0 * 1.3
    _report("twelve-arcmin", f"standing-lying disparity diff {diff:.3f} arcmin "
            f"(target 12 +- 30%)")


def test_fig2_structure():
    t0 = time.time()
    baselines = [0.05 * k for k in range(0, 121)]   # 0..6 m
    rows = feasibility_region(CaptureGeometry(), DISPLAY, OBSERVER,
                              [0.3, 1.8, 21.0], baselines)
    elapsed = time.time() - t0
    by_target = {}
    for r in rows:
        by_target.setdefault(r.target_height, []).append(r)
    # PTH strictly increasing in e_f
    for ht, series in by_target.items():
        pths = [r.pth for r in series]
        assert all(b > a for a, b in zip(pths, pths[1:])), f"PTH not monotone for {ht}"
    # crown leaves the fusible region at smaller e_f than the standing person
    def first_nonfusible(ht):
        return next((r.baseline for r in by_target[ht] if not r.fusible), math.inf)
    crown_exit = first_nonfusible(21.0)
    person_exit = first_nonfusible(1.8)
    assert crown_exit < person_exit
    # non-empty detectable & fusible region at 6 arcmin
    gray = [r for r in rows if r.detectable and r.fusible]
    assert gray
    assert elapsed < 1.0
    _report("fig2-structure",
            f"crown exits fusible at {crown_exit:.2f} m < person {person_exit:.2f} m, "
            f"gray region {len(gray)} cells, sweep {elapsed * 1e3:.0f} ms")


# ---------------------------------------------------------------------------
# integral criteria
# ---------------------------------------------------------------------------

def test_integral_identity(stack1_full):
    stack, _ = stack1_full
    frame = stack.frames[14]
    assert frame.pose.x == 0.0
    ii = integrate(stack, IntegralParams(viewpoint=0.0, aperture=0.0,
                                         focal_distance=H))
    assert ii.frame_count == 1
    assert np.array_equal(ii.image, frame.image.astype(np.float64))
    _report("integral-identity", "a=0 at sampled pose is bit-exact")


def test_parallax_law(stack1_full):
    stack, scene = stack1_full
    ht = 1.8
    tx, ty = scene.spec.targets[0].position
    cx = int(round(DEFAULT_INTRINSICS.cx + FPX * tx / (H - ht)))
    cy = int(round(DEFAULT_INTRINSICS.cy + FPX * ty / (H - ht)))
    worst = 0.0
    for e_f in (0.5, 1.0, 2.0, 4.0):
        pair = stereo_pair(stack, u=0.0, e_f=e_f, a=2.0, h=H)
        m = measured_disparity(pair, region_around(cx, cy, 25))
        analytic = FPX * e_f * (1 / (H - ht) - 1 / H)
        err = abs(abs(m.disparity_px) - analytic)
        worst = max(worst, err)
        assert err <= 0.25, f"e_f={e_f}: measured {m.disparity_px} vs {analytic}"
    pair = stereo_pair(stack, u=0.0, e_f=2.0, a=2.0, h=H)
    ground = measured_disparity(pair, region_around(160, 150, 25))
    assert abs(ground.disparity_px) < 0.1
    _report("parallax-law", f"worst target err {worst:.3f} px (<=0.25), "
            f"ground {abs(ground.disparity_px):.3f} px (<0.1)")


def test_occluder_point_spread():
    # analytic point frames make the ray-geometry oracle exact
    intr = DEFAULT_INTRINSICS
    o, amp = 21.0, 100.0
    frames = []
    for s in np.arange(29) * 0.5 - 7.0:
        img = np.zeros((intr.height, intr.width), dtype=np.float32)
        px = intr.cx + intr.f_px * (0.0 - float(s)) / (H - o)
        x0 = int(math.floor(px))
        t = px - x0
        if 0 <= x0 < intr.width:
            img[intr.height // 2, x0] = amp * (1 - t)
        if 0 <= x0 + 1 < intr.width:
            img[intr.height // 2, x0 + 1] = amp * t
        frames.append(Frame(image=img, pose=Pose(float(s)), intrinsics=intr))
    ii = integrate(ScanStack(frames), IntegralParams(viewpoint=0.0, aperture=4.0,
                                                     focal_distance=H))
    row = np.nan_to_num(ii.image[intr.height // 2])
    cols = np.nonzero(row > 1e-9)[0]
    left = cols[cols < cols.min() + 5]
    right = cols[cols > cols.max() - 5]
    span_px = (float((right * row[right]).sum() / row[right].sum())
               - float((left * row[left]).sum() / row[left].sum()))
    gsd = H / intr.f_px
    b = 4.0 * o / (H - o)
    assert b == 16.8
    err = abs(span_px * gsd - b)
    assert err <= gsd
    _report("occluder-point-spread",
            f"smear {span_px * gsd:.3f} m vs b={b} m, err {err:.4f} m <= 1 ground "
            f"sample ({gsd:.4f} m)")


# ---------------------------------------------------------------------------
# simulation-backed metric criteria (shared dense-preset curves)
# ---------------------------------------------------------------------------

def test_occlusion_suppression_monotonic(preset3_data):
    curve = preset3_data["suppression"]
    seq = [curve[a] for a in (0.0, 1.0, 2.0, 4.0)]
    assert seq[-1] > seq[0], "a=4 must exceed a=0"
    assert all(b >= a for a, b in zip(seq, seq[1:])), f"not non-decreasing: {seq}"
    t = preset3_data["timings"]["suppression"]
    assert t < 60.0
    _report("suppression-monotonic",
            "a={0,1,2,4}: " + ", ".join(f"{v:.3f}" for v in seq)
            + f"; scoring {t:.1f} s (<60 s)")


def test_contrast_loss_with_aperture(preset3_data):
    curve = preset3_data["contrast"]
    seq = [curve[a] for a in (1.0, 2.0, 4.0, 8.0, 14.0)]
    assert all(b <= a for a, b in zip(seq, seq[1:])), f"not non-increasing: {seq}"
    _report("contrast-loss",
            "michelson a={1,2,4,8,14}: " + ", ".join(f"{v:.3f}" for v in seq))


def test_rivalry_growth(preset3_data, stack1_full):
    curve = preset3_data["rivalry"]
    seq = [curve[e] for e in (0.5, 1.0, 2.0, 4.0)]
    assert all(b >= a for a, b in zip(seq, seq[1:])), f"not non-decreasing: {seq}"
    stack, scene = stack1_full
    worst = 0.0
    for e_f in (0.5, 1.0, 2.0, 4.0):
        pair = stereo_pair(stack, u=0.0, e_f=e_f, a=2.0, h=H)
        s = rivalry_score(pair, scene.spec.ground_temp, scene.spec.occluders.temp,
                          scene_dynamic_range(scene))
        worst = max(worst, s)
        assert s < 0.01
    _report("rivalry-growth",
            "dense e_f={0.5,1,2,4}: " + ", ".join(f"{v:.3f}" for v in seq)
            + f"; unoccluded max {worst:.4f} (<0.01)")


def test_appendix1_plane_sweep(stack1_full, preset3_data):
    t0 = time.time()
    depth_grid = (21.8, 26.0)
    step = 0.4
    true_depth = H - 1.8

    stack, scene = stack1_full
    dm = plane_sweep_depth(stack, depth_grid, step)
    ii = integrate(stack, IntegralParams(viewpoint=0.0, aperture=0.0,
                                         focal_distance=H))
    mask = target_footprint_mask(ii, scene, 0) & dm.valid
    open_err = abs(float(np.median(dm.depth[mask])) - true_depth)
    assert open_err <= 0.3
    ground_conf = float(np.median(dm.score[100:180, 200:280]))

    stack3, scene3 = preset3_data["seed0"]
    dm3 = plane_sweep_depth(stack3, depth_grid, step)
    ii3 = integrate(stack3, IntegralParams(viewpoint=0.0, aperture=0.0,
                                           focal_distance=H))
    mask3 = target_footprint_mask(ii3, scene3, 0) & dm3.valid
    dense_err = abs(float(np.median(dm3.depth[mask3])) - true_depth)
    dense_conf = float(np.median(dm3.score[mask3]))
    assert dense_err > 2.0 or dense_conf < ground_conf
    elapsed = time.time() - t0
    assert elapsed < 120.0
    _report("appendix1-plane-sweep",
            f"open-field err {open_err:.2f} m (<=0.3); dense err {dense_err:.2f} m / "
            f"conf {dense_conf:.4f} vs ground baseline {ground_conf:.4f}; "
            f"{elapsed:.1f} s (<120 s)")


def test_sweep_machinery(preset3_data):
    stack, scene = preset3_data["seed0"]
    ef_values = [0.5, 1.0, 2.0, 4.0]
    a_values = [1.0, 2.0, 4.0, 8.0, 11.0]
    grid = parameter_sweep(stack, "composite", ef_values, a_values, scene=scene)
    # cells beyond e_f + a = 14 m are infeasible, everything else is populated
    for i, e_f in enumerate(ef_values):
        for j, a in enumerate(a_values):
            if e_f + a > 14.0:
                assert not grid.feasible[i, j] and np.isnan(grid.scores[i, j])
            else:
                assert grid.feasible[i, j] and np.isfinite(grid.scores[i, j])
    i, j = np.unravel_index(np.nanargmax(grid.scores), grid.scores.shape)
    best_ef, best_a = float(ef_values[i]), float(a_values[j])
    in_reported_optimum = 1.0 <= best_ef <= 2.0 and 1.0 <= best_a <= 4.0
    note = ("inside" if in_reported_optimum else
            "outside (documented deviation; composite is a proxy for the "
            "observer scores)")
    _report("sweep-machinery",
            f"infeasible cells marked; composite argmax at e_f={best_ef}, "
            f"a={best_a}, {note} the reported e_f 1-2 m / a 1-4 m optimum")


# ---------------------------------------------------------------------------
# service/CLI equivalence
# ---------------------------------------------------------------------------

def test_service_cli_equivalence(stack1_dir, tmp_path):
    client = TestClient(create_app(stack1_dir.parent))
    rc = cli_main(["integrate", "--stack", str(stack1_dir), "--u", "0",
                   "--a", "4", "--h", "26", "--out", str(tmp_path / "int.png")])
    assert rc == 0
    r = client.get(f"/stacks/{stack1_dir.name}/integral",
                   params={"u": 0, "a": 4, "h": 26})
    assert r.status_code == 200
    assert r.content == (tmp_path / "int.png").read_bytes()

    rc = cli_main(["stereo", "--stack", str(stack1_dir), "--u", "0", "--a", "2",
                   "--ef", "1", "--h", "26", "--out", str(tmp_path / "st")])
    assert rc == 0
    for mode, name in (("sbs", "st_sbs.png"), ("anaglyph", "st_anaglyph.png")):
        r = client.get(f"/stacks/{stack1_dir.name}/stereo",
                       params={"u": 0, "a": 2, "ef": 1, "h": 26, "mode": mode})
        assert r.content == (tmp_path / name).read_bytes()

    resp = client.get("/perception", params={"ht": 1.8, "ef": 1.0}).json()
    lib = perceived_target_height(
        CaptureGeometry(baseline=1.0, target_height=1.8), DISPLAY,
        observer=OBSERVER)
    for key, ref in (("pth", lib.pth), ("disparity_m", lib.disparity_m),
                     ("disparity_arcmin", lib.disparity_arcmin),
                     ("jddi", lib.jddi), ("gradient", lib.gradient),
                     ("perceived_distance_m", lib.perceived_distance_m)):
        assert abs(resp[key] - ref) < 1e-9
    _report("service-cli-equivalence",
            "integral + stereo bytes identical, perception numerics within 1e-9")
