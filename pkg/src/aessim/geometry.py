"""Collision geometry: driveable-space containment and the staged
circumscribed-circle / inscribed-circle / separating-axis collision check."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Pose:
    """Planar pose (position [m], heading [rad])."""

    X: float = 0.0
    Y: float = 0.0
    psi: float = 0.0


@dataclass(frozen=True)
class Footprint:
    """Rectangular footprint anchored at a reference point (e.g. rear axle).

    ref_offset is the signed distance from the reference point to the
    geometric centre, along the heading. Zero-size footprints are allowed as
    degenerate point targets.
    """

    length: float
    width: float
    ref_offset: float = 0.0

    def __post_init__(self) -> None:
        if self.length < 0 or self.width < 0:
            raise ValueError("footprint dimensions must be non-negative")

    @property
    def circumscribed_radius(self) -> float:
        return 0.5 * math.hypot(self.length, self.width)

    @property
    def inscribed_radius(self) -> float:
        return 0.5 * min(self.length, self.width)

    def center(self, pose: Pose) -> tuple[float, float]:
        return (pose.X + self.ref_offset * math.cos(pose.psi),
                pose.Y + self.ref_offset * math.sin(pose.psi))

    def corners(self, pose: Pose) -> np.ndarray:
        """Corner coordinates, shape (4, 2), counter-clockwise."""
        cx, cy = self.center(pose)
        hl, hw = 0.5 * self.length, 0.5 * self.width
        c, s = math.cos(pose.psi), math.sin(pose.psi)
        local = np.array([(hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw)])
        out = np.empty_like(local)
        out[:, 0] = cx + local[:, 0] * c - local[:, 1] * s
        out[:, 1] = cy + local[:, 0] * s + local[:, 1] * c
        return out


class DriveableSpace:
    """Lateral corridor sampled at longitudinal stations.

    Each station carries one or more lateral intervals (y_left > y_right,
    left positive). On construction every interval is subdivided into bars of
    at most `granularity` metres, mirroring how the corridor is modelled.
    """

    def __init__(self, stations, intervals, granularity: float = 0.5):
        self.stations = np.asarray(stations, dtype=float)
        if self.stations.ndim != 1 or len(self.stations) < 2:
            raise ValueError("need at least two stations")
        if np.any(np.diff(self.stations) <= 0):
            raise ValueError("stations must be strictly increasing")
        if len(intervals) != len(self.stations):
            raise ValueError("one interval list per station required")
        self.intervals: list[list[tuple[float, float]]] = []
        self.bars: list[list[tuple[float, float]]] = []
        self.granularity = float(granularity)
        for per_station in intervals:
            cleaned = []
            bars = []
            for y_left, y_right in per_station:
                if y_left <= y_right:
                    raise ValueError("interval must satisfy y_left > y_right")
                cleaned.append((float(y_left), float(y_right)))
                n = max(1, math.ceil((y_left - y_right) / self.granularity))
                edges = np.linspace(y_right, y_left, n + 1)
                bars.extend((float(hi), float(lo))
                            for lo, hi in zip(edges[:-1], edges[1:]))
            self.intervals.append(cleaned)
            self.bars.append(bars)
        self._uniform = all(len(iv) == 1 for iv in self.intervals)
        if self._uniform:
            self._y_left = np.array([iv[0][0] for iv in self.intervals])
            self._y_right = np.array([iv[0][1] for iv in self.intervals])

    @classmethod
    def corridor(cls, x_start: float, x_end: float, y_left: float,
                 y_right: float, station_spacing: float = 1.0,
                 granularity: float = 0.5) -> "DriveableSpace":
        """Uniform corridor between two lateral bounds."""
        n = max(2, math.ceil((x_end - x_start) / station_spacing) + 1)
        xs = np.linspace(x_start, x_end, n)
        return cls(xs, [[(y_left, y_right)] for _ in xs], granularity)

    def covers(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return (x >= self.stations[0]) & (x <= self.stations[-1])

    def bounds_at(self, x: float) -> list[tuple[float, float]]:
        """Interpolated lateral intervals at station position x."""
        if not self.covers(x):
            return []
        idx = int(np.searchsorted(self.stations, x, side="right")) - 1
        idx = min(idx, len(self.stations) - 2)
        x0, x1 = self.stations[idx], self.stations[idx + 1]
        w = (x - x0) / (x1 - x0)
        a, b = self.intervals[idx], self.intervals[idx + 1]
        if len(a) == len(b):
            return [((1 - w) * la + w * lb, (1 - w) * ra + w * rb)
                    for (la, ra), (lb, rb) in zip(a, b)]
        # interval counts differ across the bracket: require membership in both
        return [iv for iv in a + b]

    def contains_points(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        """Vectorised membership for point arrays (single-interval fast path)."""
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        inside = self.covers(xs)
        if self._uniform:
            yl = np.interp(xs, self.stations, self._y_left)
            yr = np.interp(xs, self.stations, self._y_right)
            return inside & (ys <= yl) & (ys >= yr)
        out = np.zeros_like(inside)
        for i in np.nonzero(inside)[0]:
            idx = int(np.searchsorted(self.stations, xs[i], side="right")) - 1
            idx = min(idx, len(self.stations) - 2)
            a, b = self.intervals[idx], self.intervals[idx + 1]
            if len(a) == len(b):
                bounds = self.bounds_at(float(xs[i]))
                out[i] = any(yr <= ys[i] <= yl for yl, yr in bounds)
            else:
                out[i] = (any(yr <= ys[i] <= yl for yl, yr in a)
                          and any(yr <= ys[i] <= yl for yl, yr in b))
        return out

    def lateral_extent(self, side: str, y_ref: float, x_from: float,
                       x_to: float) -> float:
        """Usable lateral room on one side of y_ref over a station range.

        Uses, per station, the interval containing y_ref; returns the minimum
        over the range. Zero when y_ref falls outside the corridor anywhere.
        """
        sel = (self.stations >= x_from - 1e-9) & (self.stations <= x_to + 1e-9)
        if not np.any(sel):
            return 0.0
        extent = math.inf
        for i in np.nonzero(sel)[0]:
            room = 0.0
            for y_left, y_right in self.intervals[i]:
                if y_right <= y_ref <= y_left:
                    room = (y_left - y_ref) if side == "left" else (y_ref - y_right)
                    break
            extent = min(extent, room)
        return extent


@dataclass
class TargetTrack:
    """A tracked object: footprint plus predicted pose trajectory.

    Prediction times are relative to the planning instant (t=0 = now).
    """

    track_id: str
    footprint: Footprint
    times: np.ndarray
    xs: np.ndarray
    ys: np.ndarray
    psis: np.ndarray
    type_tag: str = "vehicle"   # vru | vehicle | static

    @classmethod
    def constant_velocity(cls, track_id: str, footprint: Footprint, pose: Pose,
                          speed: float, horizon: float, dt: float = 0.1,
                          type_tag: str = "vehicle") -> "TargetTrack":
        n = max(2, int(round(horizon / dt)) + 1)
        times = np.linspace(0.0, horizon, n)
        xs = pose.X + speed * math.cos(pose.psi) * times
        ys = pose.Y + speed * math.sin(pose.psi) * times
        psis = np.full(n, pose.psi)
        return cls(track_id, footprint, times, xs, ys, psis, type_tag)

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def pose_at(self, t: float, clamp: bool = True) -> Pose:
        if not clamp and (t < self.times[0] or t > self.times[-1]):
            from .errors import PredictionGap
            raise PredictionGap(f"{self.track_id}: no prediction at t={t:.3f}")
        t = min(max(t, self.times[0]), self.times[-1])
        return Pose(float(np.interp(t, self.times, self.xs)),
                    float(np.interp(t, self.times, self.ys)),
                    float(np.interp(t, self.times, self.psis)))


@dataclass
class CollisionReport:
    """Outcome of the staged collision check along one path."""

    collides: bool
    first_collision_time: float | None
    min_distance: dict[str, float] = field(default_factory=dict)
    resolved_circumscribed: int = 0
    resolved_inscribed: int = 0
    sat_evaluations: int = 0
    prediction_gap: bool = False
    first_collision_target: str | None = None


def circumscribed_check(pose_a: Pose, fp_a: Footprint,
                        pose_b: Pose, fp_b: Footprint) -> bool:
    """True when the bounding circles do not overlap (definitely no collision)."""
    ax, ay = fp_a.center(pose_a)
    bx, by = fp_b.center(pose_b)
    return math.hypot(bx - ax, by - ay) > (fp_a.circumscribed_radius
                                           + fp_b.circumscribed_radius)


def inscribed_check(pose_a: Pose, fp_a: Footprint,
                    pose_b: Pose, fp_b: Footprint) -> bool:
    """True when the inner circles overlap (definitely a collision)."""
    ax, ay = fp_a.center(pose_a)
    bx, by = fp_b.center(pose_b)
    return math.hypot(bx - ax, by - ay) < (fp_a.inscribed_radius
                                           + fp_b.inscribed_radius)


def _project(corners: np.ndarray, ax: float, ay: float) -> tuple[float, float]:
    dots = corners[:, 0] * ax + corners[:, 1] * ay
    return float(dots.min()), float(dots.max())


def sat_check(pose_a: Pose, fp_a: Footprint,
              pose_b: Pose, fp_b: Footprint) -> bool:
    """Exact rectangle intersection test; touching counts as collision."""
    ca = fp_a.corners(pose_a)
    cb = fp_b.corners(pose_b)
    for psi in (pose_a.psi, pose_b.psi):
        c, s = math.cos(psi), math.sin(psi)
        for ax, ay in ((c, s), (-s, c)):
            amin, amax = _project(ca, ax, ay)
            bmin, bmax = _project(cb, ax, ay)
            if amax < bmin or bmax < amin:
                return False
    return True


def _pair_collides(pose_a: Pose, fp_a: Footprint,
                   pose_b: Pose, fp_b: Footprint) -> bool:
    if circumscribed_check(pose_a, fp_a, pose_b, fp_b):
        return False
    if inscribed_check(pose_a, fp_a, pose_b, fp_b):
        return True
    return sat_check(pose_a, fp_a, pose_b, fp_b)


def driveable_area_check(path, space: DriveableSpace, fp: Footprint) -> bool:
    """True when the swept footprint stays inside the corridor.

    All four footprint corners must lie inside the (interpolated) lateral
    intervals at every path sample. A path reaching past the last station is
    treated as not driveable.
    """
    xs, ys, psis = path.x, path.y, path.psi
    c, s = np.cos(psis), np.sin(psis)
    cx = xs + fp.ref_offset * c
    cy = ys + fp.ref_offset * s
    hl, hw = 0.5 * fp.length, 0.5 * fp.width
    for dx, dy in ((hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw)):
        corner_x = cx + dx * c - dy * s
        corner_y = cy + dx * s + dy * c
        if not np.all(space.covers(corner_x)):
            return False
        if not np.all(space.contains_points(corner_x, corner_y)):
            return False
    return True


def _refine_collision_time(path, target: TargetTrack, fp: Footprint,
                           t_clear: float, t_hit: float) -> float:
    """Bisect the first contact instant between a clear and a hit sample."""
    for _ in range(40):
        mid = 0.5 * (t_clear + t_hit)
        if _pair_collides(path.pose_at(mid), fp,
                          target.pose_at(mid), target.footprint):
            t_hit = mid
        else:
            t_clear = mid
        if t_hit - t_clear < 1e-9:
            break
    return t_hit


def collision_check(path, targets, fp: Footprint,
                    dt_check: float = 0.1) -> CollisionReport:
    """Staged collision check of a sampled path against predicted targets.

    Check instants are the path samples subsampled to roughly dt_check. Per
    instant the circumscribed filter runs first, then the inscribed filter,
    then the separating-axis test. Targets whose prediction ends early are
    held at their last predicted pose and flagged.
    """
    report = CollisionReport(collides=False, first_collision_time=None)
    times = path.t
    if len(times) == 0:
        return report
    dt_path = times[1] - times[0] if len(times) > 1 else dt_check
    stride = max(1, int(round(dt_check / max(dt_path, 1e-9))))
    idx = np.arange(0, len(times), stride)
    if idx[-1] != len(times) - 1:
        idx = np.append(idx, len(times) - 1)
    check_t = times[idx]

    c, s = np.cos(path.psi[idx]), np.sin(path.psi[idx])
    ego_cx = path.x[idx] + fp.ref_offset * c
    ego_cy = path.y[idx] + fp.ref_offset * s

    first_hit = math.inf
    first_target = None
    for target in targets:
        if target.horizon < check_t[-1] - 1e-9:
            report.prediction_gap = True
        tgt_t = np.clip(check_t, target.times[0], target.times[-1])
        tx = np.interp(tgt_t, target.times, target.xs)
        ty = np.interp(tgt_t, target.times, target.ys)
        tpsi = np.interp(tgt_t, target.times, target.psis)
        off = target.footprint.ref_offset
        tcx = tx + off * np.cos(tpsi)
        tcy = ty + off * np.sin(tpsi)
        dist = np.hypot(tcx - ego_cx, tcy - ego_cy)
        report.min_distance[target.track_id] = float(dist.min())

        rc = fp.circumscribed_radius + target.footprint.circumscribed_radius
        ri = fp.inscribed_radius + target.footprint.inscribed_radius
        clear = dist > rc
        report.resolved_circumscribed += int(clear.sum())
        hit_time = None
        for k in np.nonzero(~clear)[0]:
            if dist[k] < ri:
                report.resolved_inscribed += 1
                hit = True
            else:
                report.sat_evaluations += 1
                hit = sat_check(path.pose_at(float(check_t[k])), fp,
                                target.pose_at(float(check_t[k])),
                                target.footprint)
            if hit:
                hit_time = float(check_t[k])
                if k > 0:
                    hit_time = _refine_collision_time(
                        path, target, fp, float(check_t[k - 1]), hit_time)
                break
        if hit_time is not None and hit_time < first_hit:
            first_hit = hit_time
            first_target = target.track_id

    if first_target is not None:
        report.collides = True
        report.first_collision_time = first_hit
        report.first_collision_target = first_target
    return report
