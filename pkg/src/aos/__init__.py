"""Synthetic-aperture stereo imaging toolkit.

Simulates occluded aerial thermal scans, registers and averages them into
occlusion-suppressed integral images and stereo integral pairs, and evaluates
when scaled stereoscopic disparities make target heights perceivable.
"""

from .errors import MissingGroundTruth, ValidationError, WindowError
from .integral import (IntegralImage, IntegralParams, StereoPair, compose_display,
                       integrate, project_to_viewpoint, stereo_pair)
from .metrics import (DepthMap, DisparityMeasurement, SweepGrid, contrast_metric,
                      measured_disparity, occlusion_suppression_score,
                      parameter_sweep, plane_sweep_depth, region_around,
                      rivalry_score)
from .perception import (CaptureGeometry, DisplayModel, ObserverModel,
                         PerceptionResult, disparity, disparity_gradient,
                         feasibility_region, jddi, perceived_distance,
                         perceived_target_height)
from .scene import (DEFAULT_INTRINSICS, DEFAULT_PATH, CameraIntrinsics, Frame,
                    OccluderLayerSpec, Pose, ScanPath, ScanStack, Scene,
                    SceneSpec, TargetSpec, generate_scene,
                    ground_truth_visibility, render_frame, render_scan,
                    scene_preset)

__version__ = "0.1.0"
