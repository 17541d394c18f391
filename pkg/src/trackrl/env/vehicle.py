"""Surrogate vehicle: a dynamic bicycle model with linear tire forces.

The vehicle-frame state vector (``sv``) has 22 entries:

    index  field
    0      pitch angle              [rad]
    1      pitch rate               [rad/s]
    2      roll angle               [rad]
    3      roll rate                [rad/s]
    4      yaw rate                 [rad/s]
    5      longitudinal velocity    [m/s]
    6      longitudinal accel.      [m/s^2]
    7      lateral velocity         [m/s]
    8      lateral accel.           [m/s^2]
    9      steering angle           [rad]
    10     lateral control c_lat    [-1, 1]
    11     longitudinal control     [-1, 1]
    12:22  action history a_{t-1}..a_{t-5}, five (lat, long) delta pairs

Entries 0:10 are the dynamic fields a learned model predicts rates for;
10:22 evolve by the exact control-increment rule and are never learned.
All functions accept arbitrary leading batch shapes.
"""

from dataclasses import dataclass

import numpy as np

SV_DIM = 22
ALPHA, DALPHA, BETA, DBETA, YAW_RATE, VX, AX, VY, AY, STEER = range(10)
CLAT, CLONG = 10, 11
DYN = slice(0, 10)
N_DYN = 10
CTRL = slice(10, 12)
HIST = slice(12, 22)
HIST_LEN = 5

# Indices of sv fields integrated as an ODE (AX/AY are readouts, not states).
ODE_FIELDS = np.array([ALPHA, DALPHA, BETA, DBETA, YAW_RATE, VX, VY, STEER])


@dataclass
class VehicleParams:
    """Physical constants of the surrogate (documented defaults).

    The linear two-axle tire model is gated at low speed so the vehicle is
    a true equilibrium at rest, and slip denominators are floored to stay
    finite.  Steering tracks c_lat * steer_max through a first-order lag;
    steer_max is small enough that the benchmark track's sharp corner
    cannot be negotiated at straight-line target speed.
    """

    mass: float = 1900.0           # kg
    inertia_z: float = 3200.0      # kg m^2
    lf: float = 1.42               # m, COG to front axle
    lr: float = 1.48               # m, COG to rear axle
    c_front: float = 90000.0       # N/rad cornering stiffness
    c_rear: float = 110000.0       # N/rad
    steer_max: float = 0.5         # rad
    steer_tau: float = 0.18        # s, actuator lag
    f_drive: float = 8200.0        # N at c_long = 1
    f_brake: float = 14000.0       # N at c_long = -1
    drag_quad: float = 0.9         # N s^2/m^2
    drag_lin: float = 90.0         # N s/m
    pitch_per_acc: float = 0.005   # rad per m/s^2
    roll_per_acc: float = 0.007    # rad per m/s^2
    att_omega: float = 9.0         # rad/s, attitude natural frequency
    att_zeta: float = 0.85         # attitude damping ratio
    slip_floor_speed: float = 1.0  # m/s in slip denominators
    force_gate_speed: float = 0.8  # m/s, lateral-force low-speed gate
    brake_gate_speed: float = 0.3  # m/s, brake force fade near standstill


def surrogate_dynamics(x8, c_lat, c_long, p):
    """Continuous-time rates of the integrable vehicle fields.

    Args:
        x8: (..., 8) array [pitch, pitch_rate, roll, roll_rate, yaw_rate,
            vx, vy, steer].
        c_lat, c_long: (...) controls in [-1, 1].
        p: VehicleParams.
    Returns:
        (rates (..., 8), longitudinal accel (...), lateral accel (...))
    """
    alpha = x8[..., 0]
    alpha_rate = x8[..., 1]
    beta = x8[..., 2]
    beta_rate = x8[..., 3]
    yaw_rate = x8[..., 4]
    vx = x8[..., 5]
    vy = x8[..., 6]
    steer = x8[..., 7]

    d_steer = (c_lat * p.steer_max - steer) / p.steer_tau

    ve = np.sqrt(vx * vx + p.slip_floor_speed ** 2)
    gate = vx * vx / (vx * vx + p.force_gate_speed ** 2)
    slip_f = (vy + p.lf * yaw_rate) / ve - steer
    slip_r = (vy - p.lr * yaw_rate) / ve
    fy_f = -p.c_front * gate * slip_f
    fy_r = -p.c_rear * gate * slip_r

    fx = np.where(
        c_long >= 0.0,
        c_long * p.f_drive,
        c_long * p.f_brake * np.tanh(vx / p.brake_gate_speed),
    )
    resist = p.drag_quad * vx * np.abs(vx) + p.drag_lin * vx
    a_long = (fx - resist) / p.mass
    a_lat = (fy_f + fy_r) / p.mass

    d_vx = a_long + vy * yaw_rate
    d_vy = a_lat - vx * yaw_rate
    d_yaw = (p.lf * fy_f - p.lr * fy_r) / p.inertia_z

    w2 = p.att_omega * p.att_omega
    damp = 2.0 * p.att_zeta * p.att_omega
    dd_alpha = w2 * (-p.pitch_per_acc * a_long - alpha) - damp * alpha_rate
    dd_beta = w2 * (p.roll_per_acc * a_lat - beta) - damp * beta_rate

    rates = np.stack(
        [alpha_rate, dd_alpha, beta_rate, dd_beta, d_yaw, d_vx, d_vy, d_steer],
        axis=-1)
    return rates, a_long, a_lat


def apply_action(sv, action):
    """Increment controls (clamped to [-1, 1]) and shift the action history.

    Dynamic fields pass through unchanged.  Returns a new array.
    """
    sv = np.asarray(sv, dtype=np.float64)
    action = np.asarray(action, dtype=np.float64)
    out = sv.copy()
    out[..., CLAT] = np.clip(sv[..., CLAT] + action[..., 0], -1.0, 1.0)
    out[..., CLONG] = np.clip(sv[..., CLONG] + action[..., 1], -1.0, 1.0)
    out[..., 12:14] = action
    out[..., 14:22] = sv[..., 12:20]
    return out


def integrate_vehicle(sv, p, dt, substeps):
    """Advance the dynamic fields of ``sv`` by ``dt`` with fixed-step RK4.

    Controls are held at their current (already updated) values.  The
    acceleration readouts are re-evaluated at the final state.
    """
    c_lat = sv[..., CLAT]
    c_long = sv[..., CLONG]
    x = sv[..., ODE_FIELDS]
    h = dt / substeps
    for _ in range(substeps):
        k1, _, _ = surrogate_dynamics(x, c_lat, c_long, p)
        k2, _, _ = surrogate_dynamics(x + (0.5 * h) * k1, c_lat, c_long, p)
        k3, _, _ = surrogate_dynamics(x + (0.5 * h) * k2, c_lat, c_long, p)
        k4, _, _ = surrogate_dynamics(x + h * k3, c_lat, c_long, p)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    _, a_long, a_lat = surrogate_dynamics(x, c_lat, c_long, p)
    out = sv.copy()
    out[..., ODE_FIELDS] = x
    out[..., AX] = a_long
    out[..., AY] = a_lat
    return out


def step_vehicle_fields(sv, action, p, dt, substeps):
    """Full per-step state update: control increment, then integration."""
    return integrate_vehicle(apply_action(sv, action), p, dt, substeps)


def wrap_angle(a):
    """Wrap angles to (-pi, pi]."""
    return np.mod(a - np.pi, -2.0 * np.pi) + np.pi


def advance_pose(pose, vx, vy, yaw_rate, dt):
    """Project vehicle-frame velocities into the global frame over ``dt``.

    Uses the midpoint yaw for the rotation to reduce first-order bias.
    pose: (..., 3) [x, y, yaw]; vx, vy, yaw_rate: (...).
    """
    pose = np.asarray(pose, dtype=np.float64)
    yaw_mid = pose[..., 2] + 0.5 * yaw_rate * dt
    c = np.cos(yaw_mid)
    s = np.sin(yaw_mid)
    out = np.empty_like(pose)
    out[..., 0] = pose[..., 0] + (vx * c - vy * s) * dt
    out[..., 1] = pose[..., 1] + (vx * s + vy * c) * dt
    out[..., 2] = wrap_angle(pose[..., 2] + yaw_rate * dt)
    return out
