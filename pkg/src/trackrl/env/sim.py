"""Gym-style trajectory-following environment on the surrogate vehicle.

Observations concatenate the 22-entry vehicle state and the 33-entry
deviation state (55 total).  Actions are 2-vectors of control deltas in
[-delta_max, delta_max].  Episodes end when the cross-track error exceeds
a threshold or a step limit is reached.
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import UsageError
from . import vehicle as veh
from .geometry import (DEV_DIM, N_WAYPOINTS, WP_SPACING, compute_deviation,
                       find_footpoint)
from .reward import RewardWeights, reward
from .vehicle import SV_DIM, VehicleParams

OBS_DIM = SV_DIM + DEV_DIM  # 55


@dataclass
class EnvConfig:
    dt: float = 0.1             # s, control sample time
    substeps: int = 10          # RK4 sub-integrations per control step
    episode_len: int = 2000     # steps
    ect_threshold: float = 3.0  # m, |e_ct| termination bound
    delta_max: float = 0.2      # per-step control increment bound
    wp_spacing: float = WP_SPACING
    n_wp: int = N_WAYPOINTS
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    weights: RewardWeights = field(default_factory=RewardWeights)


def build_observation(sv, dev):
    return np.concatenate([sv, dev], axis=-1)


def observation_scale(cfg=None):
    """Per-dimension characteristic magnitudes for observation scaling.

    Agents divide observations by these so every entry is O(1); the values
    are coarse physical ranges, not fitted statistics.
    """
    cfg = cfg or EnvConfig()
    sv = np.array([0.05, 0.25,        # pitch, pitch rate
                   0.05, 0.25,        # roll, roll rate
                   0.7, 12.0, 4.0,    # yaw rate, vx, ax
                   1.5, 6.0,          # vy, ay
                   0.35, 1.0, 1.0]    # steer, c_lat, c_long
                  + [cfg.delta_max] * 10)
    dev = np.array([1.5, 0.5, 6.0]                        # e_ct, e_gamma, e_vx
                   + [cfg.wp_spacing * cfg.n_wp / 2.0] * cfg.n_wp   # d_i
                   + [1.2] * cfg.n_wp                     # phi_i
                   + [12.0] * cfg.n_wp)                   # target speeds
    return np.concatenate([sv, dev])


class TrackEnv:
    """Single-vehicle trajectory-following episode loop."""

    def __init__(self, track, cfg=None):
        self.track = track
        self.cfg = cfg or EnvConfig()
        self._needs_reset = True

    def reset(self, seed=None):
        """Place the vehicle at the track start, aligned, at rest.

        The start state is deterministic; ``seed`` is accepted for API
        uniformity and ignored.
        """
        del seed
        cfg = self.cfg
        self.sv = np.zeros(SV_DIM)
        start_xy, start_heading, _ = self.track.interp(np.array(0.0))
        self.pose = np.array([start_xy[0], start_xy[1], float(start_heading)])
        self.fp = find_footpoint(self.track, self.pose[:2], hint_arc=0.0)
        self.dev = compute_deviation(self.track, self.pose, self.sv, self.fp,
                                     cfg.wp_spacing, cfg.n_wp)
        self.steps = 0
        self.distance = 0.0
        self.done = False
        self._needs_reset = False
        return build_observation(self.sv, self.dev)

    def step(self, action):
        """Advance one control interval.

        Returns (observation, reward, done, info); info carries the pose,
        footpoint and raw KPI values of the new state.
        """
        if self._needs_reset or self.done:
            raise UsageError("step called on a finished episode; call reset")
        cfg = self.cfg
        action = np.clip(np.asarray(action, dtype=np.float64).reshape(2),
                         -cfg.delta_max, cfg.delta_max)

        self.sv = veh.step_vehicle_fields(self.sv, action, cfg.vehicle,
                                          cfg.dt, cfg.substeps)
        self.pose = veh.advance_pose(self.pose, self.sv[veh.VX],
                                     self.sv[veh.VY], self.sv[veh.YAW_RATE],
                                     cfg.dt)
        prev_arc = self.fp.arc
        self.fp = find_footpoint(self.track, self.pose[:2],
                                 hint_arc=prev_arc)
        self.dev = compute_deviation(self.track, self.pose, self.sv, self.fp,
                                     cfg.wp_spacing, cfg.n_wp)
        r = float(reward(self.sv, self.dev, cfg.weights))
        self.steps += 1

        # Arc progress this step, wrapped to (-L/2, L/2] on closed tracks.
        delta_arc = float(self.fp.arc - prev_arc)
        if self.track.closed:
            half = 0.5 * self.track.length
            delta_arc = (delta_arc + half) % self.track.length - half
        self.distance += delta_arc

        e_ct = float(self.dev[0])
        breach = abs(e_ct) > cfg.ect_threshold
        timeout = self.steps >= cfg.episode_len
        self.done = breach or timeout
        cause = "threshold" if breach else ("length" if timeout else "")

        info = {
            "pose": self.pose.copy(),
            "footpoint": self.fp,
            "e_ct": e_ct,
            "e_gamma": float(self.dev[1]),
            "e_vx": float(self.dev[2]),
            "ay": float(self.sv[veh.AY]),
            "action": action.copy(),
            "step_distance": delta_arc,
            "distance": self.distance,
            "laps": int(self.distance // self.track.length) if self.track.closed else 0,
            "termination": cause,
        }
        return build_observation(self.sv, self.dev), r, self.done, info
