"""Shared test utilities: finite-difference gradients and a scripted driver.

The scripted driver is a pure-pursuit steering law plus a feedforward
speed controller. It is not a learned policy; tests use it to exercise
full episodes with lap completion on the benchmark track.
"""

import numpy as np

WHEELBASE = 2.9


def numeric_grad(f, x, eps=1e-6):
    """Central-difference gradient of scalar f at array x."""
    x = np.asarray(x, dtype=np.float64)
    g = np.zeros_like(x)
    flat = x.reshape(-1)
    gf = g.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + eps
        fp = f(x)
        flat[i] = old - eps
        fm = f(x)
        flat[i] = old
        gf[i] = (fp - fm) / (2 * eps)
    return g


def rel_err(a, b, floor=1e-8):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / denom))


def scripted_action(obs, cfg):
    """Drive toward a lookahead waypoint while tracking the target speed.

    Steering: pure pursuit with a speed-scaled lookahead, converted to a
    normalized lateral control through the bicycle geometry. Longitudinal:
    exact drag inversion plus a profile-slope feedforward, with a braking
    safety net matched to the profile's deceleration capability.
    """
    sv = obs[:22]
    dev = obs[22:]
    vx = sv[5]
    c_lat, c_long = sv[10], sv[11]
    e_vx = dev[2]
    d = dev[3:13]
    phi = dev[13:23]
    vref = dev[23:33]
    p = cfg.vehicle

    la = np.clip(0.4 * vx + 3.0, 5.0, 40.0)
    i = int(np.clip(round(la / 5.0) - 1, 0, 9))
    curv = 2.0 * np.sin(phi[i]) / max(d[i], 1e-6)
    c_lat_des = np.clip(curv * WHEELBASE / p.steer_max, -1, 1)
    a_lat = np.clip(c_lat_des - c_lat, -cfg.delta_max, cfg.delta_max)

    v_fp = vx - e_vx
    allow = np.sqrt(vref ** 2 + 2 * 4.5 * 5.0 * np.arange(1, 11))
    v_cmd = min(v_fp, allow.min())
    acc_ff = vx * (vref[0] - v_fp) / 5.0
    acc_des = 2.5 * (v_cmd - vx) + acc_ff
    drag = p.drag_quad * vx * abs(vx) + p.drag_lin * vx
    f_des = p.mass * acc_des + drag
    if f_des >= 0:
        c_long_des = f_des / p.f_drive
    else:
        c_long_des = f_des / p.f_brake
    c_long_des = np.clip(c_long_des, -1, 1)
    a_long = np.clip(c_long_des - c_long, -cfg.delta_max, cfg.delta_max)
    return np.array([a_lat, a_long])


def run_scripted_episode(env, cfg):
    """Run one full episode with the scripted driver; returns a summary dict."""
    obs = env.reset()
    ret = 0.0
    n = 0
    max_ect = 0.0
    while True:
        a = scripted_action(obs, cfg)
        obs, r, done, info = env.step(a)
        ret += r
        n += 1
        max_ect = max(max_ect, abs(info["e_ct"]))
        if done:
            break
    return {
        "steps": n,
        "return": ret,
        "distance": info["distance"],
        "laps": info["laps"],
        "termination": info["termination"],
        "max_ect": max_ect,
    }
