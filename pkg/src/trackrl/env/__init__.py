"""Surrogate vehicle environment: dynamics, tracks, geometry, rewards."""

from .vehicle import (
    SV_DIM, N_DYN, DYN, CTRL, HIST,
    VehicleParams, surrogate_dynamics, apply_action, integrate_vehicle,
    step_vehicle_fields, advance_pose, wrap_angle,
)
from .track import Track, SpeedLimits, make_track, benchmark_track, \
    save_track, load_track, speed_profile
from .geometry import (
    DEV_DIM, Footpoint, find_footpoint, compute_deviation,
)
from .reward import RewardWeights, reward
from .sim import OBS_DIM, EnvConfig, TrackEnv, build_observation, \
    observation_scale

__all__ = [
    "SV_DIM", "N_DYN", "DYN", "CTRL", "HIST", "DEV_DIM", "OBS_DIM",
    "VehicleParams", "surrogate_dynamics", "apply_action",
    "integrate_vehicle", "step_vehicle_fields", "advance_pose", "wrap_angle",
    "Track", "SpeedLimits", "make_track", "benchmark_track", "save_track",
    "load_track", "speed_profile",
    "Footpoint", "find_footpoint", "compute_deviation",
    "RewardWeights", "reward",
    "EnvConfig", "TrackEnv", "build_observation", "observation_scale",
]
