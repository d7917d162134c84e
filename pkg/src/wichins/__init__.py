"""Pure-inertial navigation for wheeled vehicles.

Fuses wheel-mounted IMUs with a chassis-mounted IMU through three cascaded
extended Kalman filters (wheel state, body orientation, velocity/position),
and ships the classical inertial baselines, a trajectory/IMU simulator,
recording I/O and an evaluation harness alongside.
"""

__version__ = "0.1.0"

from .baselines import run_cmi, run_odo, run_wmi
from .dataset import (
    Recording,
    align_ground_truth,
    calibrate,
    load_recording,
    save_recording,
)
from .kinematics import WheelGeometry, forward_kinematics
from .metrics import compare, prmse, tde, trajectory_length, vrmse
from .pipeline import (
    NavSolution,
    PipelineOptions,
    VehicleConfig,
    default_vehicle,
    run_wichins,
    select_wheels,
)
from .simulate import (
    NoiseSpec,
    Segment,
    SkidEvent,
    TrajectorySpec,
    benchmark_scenario,
    circle_spec,
    figure_eight_spec,
    generate_ground_truth,
    simulate_recording,
    straight_spec,
)

__all__ = [
    "NavSolution",
    "NoiseSpec",
    "PipelineOptions",
    "Recording",
    "Segment",
    "SkidEvent",
    "TrajectorySpec",
    "VehicleConfig",
    "WheelGeometry",
    "align_ground_truth",
    "benchmark_scenario",
    "calibrate",
    "circle_spec",
    "compare",
    "default_vehicle",
    "figure_eight_spec",
    "forward_kinematics",
    "generate_ground_truth",
    "load_recording",
    "prmse",
    "run_cmi",
    "run_odo",
    "run_wichins",
    "run_wmi",
    "save_recording",
    "select_wheels",
    "simulate_recording",
    "straight_spec",
    "tde",
    "trajectory_length",
    "vrmse",
]
