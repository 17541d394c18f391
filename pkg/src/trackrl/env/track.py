"""Waypoint tracks: construction from segment lists, speed profiles, CSV I/O.

A track is an ordered polyline of waypoints carrying heading, target speed
and cumulative arc length.  ``make_track`` samples an exact segment-list
geometry (straights and circular arcs) at uniform spacing and assigns
target speeds from a lateral-acceleration cap with braking/acceleration
feasibility passes.
"""

import csv
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from .vehicle import wrap_angle


class Track:
    """Immutable waypoint track with precomputed segment tables."""

    def __init__(self, xy, heading, speed, closed):
        xy = np.asarray(xy, dtype=np.float64)
        heading = np.asarray(heading, dtype=np.float64)
        speed = np.asarray(speed, dtype=np.float64)
        n = len(xy)
        if n < 2:
            raise ConfigError("a track needs at least two waypoints")
        self.xy = xy
        self.heading = heading
        self.speed = speed
        self.closed = bool(closed)

        n_seg = n if self.closed else n - 1
        nxt = (np.arange(n_seg) + 1) % n
        self.seg_start = xy[:n_seg]
        self.seg_vec = xy[nxt] - xy[:n_seg]
        self.seg_len = np.linalg.norm(self.seg_vec, axis=1)
        if np.any(self.seg_len <= 0.0):
            raise ConfigError("consecutive waypoints must be distinct")
        self.seg_len2 = self.seg_len ** 2
        arc = np.concatenate([[0.0], np.cumsum(self.seg_len)])
        self.arc = arc[:n]            # per-waypoint cumulative arc
        self.seg_arc0 = arc[:n_seg]
        self.length = float(arc[n_seg]) if self.closed else float(arc[n - 1])
        self.n_seg = n_seg

        # Extended per-waypoint tables (n_seg + 1 entries) for interpolation;
        # headings are unwrapped so linear interpolation crosses +-pi safely.
        h_ext = np.concatenate([heading[:n_seg], [heading[nxt[-1]]]]) \
            if self.closed else heading
        self._heading_ext = np.unwrap(h_ext)
        self._speed_ext = (np.concatenate([speed[:n_seg], [speed[nxt[-1]]]])
                           if self.closed else speed)

    def wrap_arc(self, arcs):
        arcs = np.asarray(arcs, dtype=np.float64)
        if self.closed:
            return np.mod(arcs, self.length)
        return np.clip(arcs, 0.0, self.length)

    def segment_of(self, arcs):
        """Segment index covering each (already wrapped) arc position."""
        j = np.searchsorted(self.seg_arc0, arcs, side="right") - 1
        return np.clip(j, 0, self.n_seg - 1)

    def interp(self, arcs):
        """Linear interpolation along the polyline.

        Args:
            arcs: arc positions, any shape; wrapped (closed) or clipped.
        Returns:
            (xy (..., 2), heading (...), target speed (...))
        """
        a = self.wrap_arc(arcs)
        j = self.segment_of(a)
        t = (a - self.seg_arc0[j]) / self.seg_len[j]
        xy = self.seg_start[j] + t[..., None] * self.seg_vec[j]
        he = self._heading_ext
        heading = wrap_angle(he[j] + t * (he[j + 1] - he[j]))
        se = self._speed_ext
        speed = se[j] + t * (se[j + 1] - se[j])
        return xy, heading, speed


@dataclass
class SpeedLimits:
    """Target-speed profile constraints."""

    v_max: float = 30.0      # m/s on straights
    a_lat_max: float = 6.5   # m/s^2 cornering cap: v = sqrt(a_lat_max / |k|)
    a_brake: float = 4.5     # m/s^2 feasible braking
    a_accel: float = 2.2     # m/s^2 feasible acceleration


def speed_profile(curvature, ds, closed, limits):
    """Per-waypoint target speeds from curvature and feasibility passes.

    Args:
        curvature: (n,) signed curvature at each waypoint.
        ds: arc spacing to the next waypoint, scalar or (n,).
        closed: wrap the passes around the lap when True.
    """
    kappa = np.abs(np.asarray(curvature, dtype=np.float64))
    with np.errstate(divide="ignore"):
        v = np.minimum(limits.v_max, np.sqrt(limits.a_lat_max / np.maximum(kappa, 1e-12)))
    v = np.minimum(v, limits.v_max)
    n = len(v)
    ds = np.broadcast_to(np.asarray(ds, dtype=np.float64), (n,))
    laps = 2 if closed else 1
    for _ in range(laps):
        for i in range(n - 1, -1, -1):
            nxt = (i + 1) % n
            if not closed and i == n - 1:
                continue
            v[i] = min(v[i], np.sqrt(v[nxt] ** 2 + 2.0 * limits.a_brake * ds[i]))
    for _ in range(laps):
        for i in range(n):
            nxt = (i + 1) % n
            if not closed and i == n - 1:
                continue
            v[nxt] = min(v[nxt], np.sqrt(v[i] ** 2 + 2.0 * limits.a_accel * ds[i]))
    return v


def make_track(segments, spacing=2.0, closed=True, limits=None):
    """Build a track from an exact segment-list geometry.

    Args:
        segments: list of ("straight", length) or ("arc", radius, angle)
            tuples; angle in radians, positive = left turn.
        spacing: approximate waypoint spacing in meters (exact for closed
            tracks: length / round(length / spacing)).
        closed: when True the segment list must return to the start pose.
        limits: SpeedLimits for the target-speed profile.
    Returns:
        Track
    """
    limits = limits or SpeedLimits()
    # Walk the segment list, recording start pose and curvature per segment.
    seg_table = []  # (arc0, x, y, heading, kappa, length)
    x, y, th = 0.0, 0.0, 0.0
    arc0 = 0.0
    for seg in segments:
        kind = seg[0]
        if kind == "straight":
            length = float(seg[1])
            if length <= 0:
                raise ConfigError("straight segments need positive length")
            seg_table.append((arc0, x, y, th, 0.0, length))
            x += length * np.cos(th)
            y += length * np.sin(th)
        elif kind == "arc":
            radius, angle = float(seg[1]), float(seg[2])
            if radius <= 0 or angle == 0.0:
                raise ConfigError("arcs need positive radius and nonzero angle")
            kappa = np.sign(angle) / radius
            length = abs(angle) * radius
            seg_table.append((arc0, x, y, th, kappa, length))
            th_end = th + angle
            x += (np.sin(th_end) - np.sin(th)) / kappa
            y += -(np.cos(th_end) - np.cos(th)) / kappa
            th = th_end
        else:
            raise ConfigError(f"unknown segment kind {kind!r}")
        arc0 += seg_table[-1][5]
    total = arc0

    if closed:
        gap = np.hypot(x - 0.0, y - 0.0)
        heading_gap = abs(wrap_angle(th - 0.0))
        if gap > 1e-6 or heading_gap > 1e-6:
            raise ConfigError(
                f"segment list does not close: endpoint offset {gap:.3e} m, "
                f"heading offset {heading_gap:.3e} rad")

    if closed:
        n = max(4, int(round(total / spacing)))
        arcs = np.arange(n) * (total / n)
    else:
        n = max(2, int(round(total / spacing)) + 1)
        arcs = np.linspace(0.0, total, n)

    seg_arc0 = np.array([s[0] for s in seg_table])
    idx = np.clip(np.searchsorted(seg_arc0, arcs, side="right") - 1, 0,
                  len(seg_table) - 1)
    xs = np.empty(n)
    ys = np.empty(n)
    hs = np.empty(n)
    ks = np.empty(n)
    for i, (a, j) in enumerate(zip(arcs, idx)):
        a0, sx, sy, sth, kappa, _ = seg_table[j]
        s = a - a0
        if kappa == 0.0:
            xs[i] = sx + s * np.cos(sth)
            ys[i] = sy + s * np.sin(sth)
            hs[i] = sth
        else:
            th1 = sth + kappa * s
            xs[i] = sx + (np.sin(th1) - np.sin(sth)) / kappa
            ys[i] = sy - (np.cos(th1) - np.cos(sth)) / kappa
            hs[i] = th1
        ks[i] = kappa

    if closed:
        ds = total / n
    else:
        gaps = np.diff(arcs)
        ds = np.append(gaps, gaps[-1])
    speed = speed_profile(ks, ds, closed, limits)
    return Track(np.column_stack([xs, ys]), wrap_angle(hs), speed, closed)


def benchmark_track(spacing=2.0, limits=None):
    """Default closed benchmark: two long straights, wide corners, one
    sharp corner (radius 12 m) that forces heavy braking."""
    quarter = np.pi / 2.0
    segments = [
        ("straight", 300.0),
        ("arc", 20.0, quarter),
        ("straight", 10.0),
        ("arc", 20.0, quarter),
        ("straight", 308.0),
        ("arc", 12.0, quarter),   # sharp corner
        ("straight", 18.0),
        ("arc", 20.0, quarter),
    ]
    return make_track(segments, spacing=spacing, closed=True, limits=limits)


def save_track(path, track):
    """Write the documented CSV schema: x,y,heading,target_speed,arc_length."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["x", "y", "heading", "target_speed", "arc_length"])
        for i in range(len(track.xy)):
            # repr of a Python float is the shortest exact roundtrip form
            writer.writerow([repr(float(track.xy[i, 0])),
                             repr(float(track.xy[i, 1])),
                             repr(float(track.heading[i])),
                             repr(float(track.speed[i])),
                             repr(float(track.arc[i]))])


def load_track(path, closed=True):
    """Read a track CSV written by ``save_track``.

    The schema does not carry the closed-loop flag; pass ``closed``.
    """
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        if header[:4] != ["x", "y", "heading", "target_speed"]:
            raise ConfigError(f"unexpected track CSV header {header}")
        rows = [[float(v) for v in row] for row in reader]
    data = np.asarray(rows)
    return Track(data[:, :2], data[:, 2], data[:, 3], closed)
