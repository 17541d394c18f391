"""Footpoint projection and deviation-state assembly, batched.

All functions accept arbitrary leading batch shapes; the environment calls
them with scalars, the planner with thousands of particles at once.
"""

from typing import NamedTuple

import numpy as np

from .vehicle import wrap_angle, VX

# Deviation-state layout (33 entries).
DEV_DIM = 33
D_ECT = 0
D_EGAMMA = 1
D_EVX = 2
D_WP_DIST = slice(3, 13)
D_WP_PHI = slice(13, 23)
D_WP_SPEED = slice(23, 33)
N_WAYPOINTS = 10
WP_SPACING = 5.0  # m between observed waypoints ahead of the footpoint


class Footpoint(NamedTuple):
    """Closest point on the track; arrays share the query's batch shape."""

    xy: np.ndarray       # (..., 2)
    arc: np.ndarray      # (...)
    heading: np.ndarray  # (...)
    speed: np.ndarray    # (...)


def find_footpoint(track, xy, hint_arc=None, window=(15.0, 30.0)):
    """Project points onto the track polyline.

    Args:
        track: Track.
        xy: (..., 2) query points.
        hint_arc: (...) previous footpoint arc; confines the search to a
            window around it.  None searches every segment.
        window: (behind_m, ahead_m) hint window extent in meters.
    Returns:
        Footpoint.  Distance ties resolve to the smallest arc position at
        or ahead of the hint (ascending arc without a hint).
    """
    xy = np.asarray(xy, dtype=np.float64)
    batch_shape = xy.shape[:-1]
    p = xy.reshape(-1, 2)
    m = p.shape[0]
    n_seg = track.n_seg

    if hint_arc is None:
        idx = np.broadcast_to(np.arange(n_seg), (m, n_seg))
    else:
        hint = track.wrap_arc(np.asarray(hint_arc)).reshape(-1)
        mean_spacing = track.length / n_seg
        n_behind = min(n_seg // 2, int(np.ceil(window[0] / mean_spacing)) + 1)
        n_ahead = min(n_seg - 1 - n_behind,
                      int(np.ceil(window[1] / mean_spacing)) + 1)
        # Candidates ordered at-or-ahead first, then behind, both ascending
        # by arc: argmin's first-hit rule then implements the tie-break.
        offsets = np.concatenate([np.arange(0, n_ahead + 1),
                                  np.arange(-n_behind, 0)])
        base = track.segment_of(hint)
        idx = base[:, None] + offsets[None, :]
        if track.closed:
            idx = np.mod(idx, n_seg)
        else:
            idx = np.clip(idx, 0, n_seg - 1)

    a = track.seg_start[idx]                      # (m, W, 2)
    v = track.seg_vec[idx]
    t = np.einsum("mwk,mwk->mw", p[:, None, :] - a, v) / track.seg_len2[idx]
    np.clip(t, 0.0, 1.0, out=t)
    proj = a + t[..., None] * v
    d2 = np.square(p[:, None, :] - proj).sum(axis=-1)
    best = np.argmin(d2, axis=1)

    rows = np.arange(m)
    seg = idx[rows, best]
    tb = t[rows, best]
    fp_xy = proj[rows, best]
    arc = track.seg_arc0[seg] + tb * track.seg_len[seg]
    he = track._heading_ext
    heading = wrap_angle(he[seg] + tb * (he[seg + 1] - he[seg]))
    se = track._speed_ext
    speed = se[seg] + tb * (se[seg + 1] - se[seg])

    return Footpoint(
        fp_xy.reshape(batch_shape + (2,)),
        arc.reshape(batch_shape),
        heading.reshape(batch_shape),
        speed.reshape(batch_shape),
    )


def compute_deviation(track, pose, sv, fp,
                      wp_spacing=WP_SPACING, n_wp=N_WAYPOINTS):
    """Assemble the 33-entry deviation state.

    Layout: [e_ct, e_gamma, e_vx, d_0..d_9, phi_0..phi_9, v_0..v_9] where
    e_ct is signed positive to the left of the track heading, (d_i, phi_i)
    are vehicle-frame polar coordinates of waypoints spaced wp_spacing
    meters ahead of the footpoint, and v_i their target speeds.
    """
    pose = np.asarray(pose, dtype=np.float64)
    sv = np.asarray(sv, dtype=np.float64)
    batch_shape = pose.shape[:-1]
    diff = pose[..., :2] - fp.xy
    dist = np.linalg.norm(diff, axis=-1)
    cross = (np.cos(fp.heading) * diff[..., 1]
             - np.sin(fp.heading) * diff[..., 0])
    e_ct = np.where(cross >= 0.0, dist, -dist)
    e_gamma = wrap_angle(pose[..., 2] - fp.heading)
    e_vx = sv[..., VX] - fp.speed

    steps = np.arange(1, n_wp + 1, dtype=np.float64) * wp_spacing
    wp_arcs = fp.arc[..., None] + steps
    wp_xy, _, wp_speed = track.interp(wp_arcs)

    rel = wp_xy - pose[..., None, :2]
    yaw = pose[..., 2:3]
    c = np.cos(yaw)
    s = np.sin(yaw)
    xv = c * rel[..., 0] + s * rel[..., 1]
    yv = -s * rel[..., 0] + c * rel[..., 1]
    d = np.hypot(xv, yv)
    phi = wrap_angle(np.arctan2(yv, xv))

    dev = np.empty(batch_shape + (DEV_DIM,), dtype=np.float64)
    dev[..., D_ECT] = e_ct
    dev[..., D_EGAMMA] = e_gamma
    dev[..., D_EVX] = e_vx
    dev[..., D_WP_DIST] = d
    dev[..., D_WP_PHI] = phi
    dev[..., D_WP_SPEED] = wp_speed
    return dev
