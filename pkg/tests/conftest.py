import numpy as np
import pytest

from aos.scene import (DEFAULT_INTRINSICS, CameraIntrinsics, OccluderLayerSpec,
                       ScanPath, SceneSpec, TargetSpec, generate_scene,
                       render_scan, scene_preset)

# small-format camera for fast unit tests; full 640x512 reserved for acceptance
SMALL_INTRINSICS = CameraIntrinsics(fov_deg=61.0, width=160, height=128)
SMALL_PATH = ScanPath(x_start=-2.0, length=4.0, spacing=0.5, altitude=26.0)


def make_scene(targets=(), density=0.0, seed=0, noise=1.5, crown_radius=(0.3, 0.1),
               crown_height=(21.0, 1.5), extent=(50.0, 30.0)):
    spec = SceneSpec(
        extent=extent, ground_temp=30.0, ground_noise_amp=noise,
        targets=tuple(targets),
        occluders=OccluderLayerSpec(density=density, crown_height=crown_height,
                                    crown_radius=crown_radius, temp=20.0),
        seed=seed)
    return generate_scene(spec)


@pytest.fixture(scope="session")
def stack1_full():
    """Preset 1 (open field, standing + lying person) at full 640x512x29."""
    scene = generate_scene(scene_preset(1, seed=0))
    stack = render_scan(scene, ScanPath(), DEFAULT_INTRINSICS)
    return stack, scene


@pytest.fixture(scope="session")
def small_flat_stack():
    """Flat noisy ground, no targets/occluders, small format."""
    scene = make_scene(seed=3)
    return render_scan(scene, SMALL_PATH, SMALL_INTRINSICS), scene


@pytest.fixture(scope="session")
def small_person_stack():
    """Standing person on noisy ground, small format, no occlusion."""
    person = TargetSpec(position=(0.3, 0.2), height=1.8, footprint=0.28, temp=37.0)
    scene = make_scene(targets=[person], seed=5)
    return render_scan(scene, SMALL_PATH, SMALL_INTRINSICS), scene
