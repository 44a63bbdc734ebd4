"""Evasive path generation: breakpoint curvature profiles, discrete Fresnel
sampling, scaling of the maximum-severity path into the driveable corridor,
and replanning from an updated vehicle state.

A profile is a list of up to ten (time, curvature, velocity) breakpoints with
piecewise-linear curvature: initiation (possibly with pre-braking), a clothoid
ramp to the evasion curvature, an optional constant-curvature plateau, a ramp
back to the road curvature, an optional constant-heading stretch for extra
lateral offset, and a mirrored stabilisation phase that cancels the
accumulated heading so the path ends parallel to the road.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .capability import CapabilityRecord, EgoState
from .errors import InfeasibleProfile, NoFeasiblePath
from .geometry import DriveableSpace, Pose


@dataclass
class PathTuning:
    """Shape parameters of the evasive profile."""

    t_pb: float = 0.0          # pre-braking duration [s]
    psi_max: float = 0.2       # max heading relative to the road [rad]
    i_sb: float = 0.8          # stabilisation curvature ratio, (0, 1]
    rho_road: float = 0.0      # road curvature [1/m], constant
    y_offset: float = 0.0      # extra lateral deviation at constant heading [m]
    t_stabilize: float = 0.5   # settle time after the heading is cancelled [s]
    n_tot: int = 6             # paths per side
    dt_presample: float = 0.01     # Fresnel sampling step [s]
    min_lateral_clearance: float = 1.0  # least usable corridor width [m]

    def __post_init__(self) -> None:
        if self.t_pb < 0 or self.psi_max <= 0 or not (0 < self.i_sb <= 1):
            raise ValueError("invalid path tuning")
        if self.n_tot < 1 or self.dt_presample <= 0:
            raise ValueError("invalid path tuning")


@dataclass
class CurvatureProfile:
    """Breakpoint description of one evasive path.

    times are relative to the planning instant (t0 = 0). psi0 is the heading
    relative to the road at t0; v and rho are per-breakpoint.
    """

    times: np.ndarray
    rhos: np.ndarray
    vels: np.ndarray
    psi0: float
    direction: str                      # "left" | "right"
    capability: CapabilityRecord | None = None
    tuning: PathTuning | None = None

    @property
    def t8(self) -> float:
        return float(self.times[8])

    @property
    def t9(self) -> float:
        return float(self.times[9])

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])

    def rho_at(self, t) -> np.ndarray:
        """Piecewise-linear curvature, held constant past t9."""
        return np.interp(t, self.times, self.rhos)

    def v_at(self, t) -> np.ndarray:
        return np.interp(t, self.times, self.vels)

    def heading_at(self, t: float) -> float:
        """Heading from trapezoidal integration of rho(t) * v(t) per segment."""
        t = min(max(t, float(self.times[0])), float(self.times[-1]))
        psi = self.psi0
        for i in range(len(self.times) - 1):
            t0, t1 = float(self.times[i]), float(self.times[i + 1])
            hi = min(t, t1)
            if hi <= t0:
                continue
            w = (hi - t0) / (t1 - t0)
            r_hi = self.rhos[i] + (self.rhos[i + 1] - self.rhos[i]) * w
            v_hi = self.vels[i] + (self.vels[i + 1] - self.vels[i]) * w
            psi += 0.5 * (self.rhos[i] * self.vels[i] + r_hi * v_hi) * (hi - t0)
        return psi

    def max_abs_rho(self) -> float:
        return float(np.max(np.abs(self.rhos)))


@dataclass
class SampledPath:
    """Time-gridded path samples.

    Freshly pre-sampled paths start at the origin; anchor_path() shifts them
    into the global (road) frame. frame records the global pose of the
    profile start so the path can be re-sampled and re-anchored later.
    """

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    psi: np.ndarray
    rho: np.ndarray
    v: np.ndarray
    frame: Pose = field(default_factory=Pose)
    profile: CurvatureProfile | None = None
    side: str = "left"
    index: int = 0
    path_id: str = ""

    def __len__(self) -> int:
        return len(self.t)

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0]) if len(self.t) > 1 else 0.0

    @property
    def terminal_offset(self) -> float:
        """Lateral deviation of the final sample relative to the start."""
        return float(self.y[-1] - self.y[0])

    def pose_at(self, t: float) -> Pose:
        return Pose(float(np.interp(t, self.t, self.x)),
                    float(np.interp(t, self.t, self.y)),
                    float(np.interp(t, self.t, self.psi)))

    def suffix_from(self, tau: float) -> "SampledPath":
        """Remaining path from relative time tau, re-anchored to t=0."""
        keep = self.t >= tau - 1e-12
        if not np.any(keep):
            keep = np.zeros_like(self.t, dtype=bool)
            keep[-1] = True
        return replace(self, t=self.t[keep] - tau, x=self.x[keep],
                       y=self.y[keep], psi=self.psi[keep], rho=self.rho[keep],
                       v=self.v[keep])


def anchor_path(path: SampledPath, origin: Pose) -> SampledPath:
    """Express an origin-relative path in the frame the origin lives in."""
    c, s = math.cos(origin.psi), math.sin(origin.psi)
    gx = origin.X + path.x * c - path.y * s
    gy = origin.Y + path.x * s + path.y * c
    return replace(path, x=gx, y=gy, psi=path.psi + origin.psi, frame=origin)


@dataclass
class PathSet:
    """Family of sampled paths on one side, ordered by curvature magnitude."""

    paths: list[SampledPath]
    side: str
    generation_time: float = 0.0
    scale: float = 1.0
    y_desired: float = 0.0


def _mirror_init(init: EgoState) -> EgoState:
    return EgoState(X=init.X, Y=init.Y, psi=-init.psi, v_x=init.v_x,
                    a_x=init.a_x, yaw_rate=-init.yaw_rate)


def build_max_severity_profile(init: EgoState, cap: CapabilityRecord,
                               tuning: PathTuning,
                               direction: str = "left") -> CurvatureProfile:
    """Breakpoints t0..t9 of the most severe feasible profile.

    Raises InfeasibleProfile when the vehicle heading plus the heading
    accumulated during initiation already exceeds psi_max on the requested
    side.
    """
    if direction not in ("left", "right"):
        raise ValueError("direction must be 'left' or 'right'")
    if direction == "right":
        mirrored = _mirror_init(init)
        mtuning = replace(tuning, rho_road=-tuning.rho_road)
        prof = _build_canonical(mirrored, cap, mtuning)
        return CurvatureProfile(times=prof.times, rhos=-prof.rhos,
                                vels=prof.vels, psi0=-prof.psi0,
                                direction="right", capability=cap,
                                tuning=tuning)
    prof = _build_canonical(init, cap, tuning)
    prof.direction = "left"
    prof.capability = cap
    prof.tuning = tuning
    return prof


def _build_canonical(init: EgoState, cap: CapabilityRecord,
                     tuning: PathTuning) -> CurvatureProfile:
    """Left-evading profile; the caller mirrors for right evasion."""
    v0 = init.v_x
    rho0 = init.yaw_rate / v0
    psi0 = init.psi
    rho_dot = cap.rho_dot_max
    rho_road = tuning.rho_road

    # initiation: pre-braking only when the capability scenario brakes
    t_pb = tuning.t_pb if cap.scenario.pre_braking else 0.0
    t1 = t_pb
    v1 = v0 + cap.a_x_min * t1
    rho1 = v0 * rho0 / v1 + rho_road if t1 > 0 else rho0
    psi_tot1 = 0.5 * (t1 * rho0 * v0 + t1 * rho1 * v1)

    room = tuning.psi_max - (psi0 + psi_tot1)
    if room < 0:
        raise InfeasibleProfile(
            f"heading headroom {room:.4f} rad on the left side")

    v = v1  # constant from t1 onward
    rho2_free = math.sqrt(room * rho_dot / v) + rho_road
    clamped = rho2_free >= cap.rho_max
    rho2 = min(rho2_free, abs(cap.rho_max))
    t2 = t1 + abs(rho2 - rho1) / rho_dot

    # plateau keeps the curvature until the heading headroom is used up
    if clamped and rho2 > 0:
        dt23 = max(0.0, room / (v * rho2) - (t2 - t1))
    else:
        dt23 = 0.0
    t3 = t2 + dt23
    rho3 = rho2

    rho4 = rho_road
    t4 = t3 + abs(rho3 - rho4) / rho_dot

    # heading at t4 from exact trapezoids over the built segments
    psi4 = psi0 + psi_tot1
    psi4 += 0.5 * (rho1 + rho2) * v * (t2 - t1)
    psi4 += rho2 * v * dt23
    psi4 += 0.5 * (rho3 + rho4) * v * (t4 - t3)

    # optional constant-heading stretch for additional lateral offset
    if tuning.y_offset > 0 and abs(math.sin(psi4)) > 1e-9:
        t5 = t4 + tuning.y_offset / (v * math.sin(psi4))
    else:
        t5 = t4
    rho5 = rho4
    psi5 = psi4 + rho5 * v * (t5 - t4)

    # stabilisation: cancel psi5 exactly with a mirrored ramp pair
    rho6_cap = tuning.i_sb * rho2
    if abs(psi5) > 1e-12 and rho6_cap > 0:
        rho6_free = math.sqrt(abs(psi5) * rho_dot / v) + rho_road
        rho6_mag = min(rho6_free, rho6_cap)
        dt67 = abs(psi5) / (rho6_mag * v) - rho6_mag / rho_dot
        dt67 = max(0.0, dt67)
        rho6 = -math.copysign(rho6_mag, psi5)
    else:
        rho6_mag = 0.0
        dt67 = 0.0
        rho6 = rho_road
    t6 = t5 + abs(rho6 - rho5) / rho_dot
    rho7 = rho6
    t7 = t6 + dt67
    rho8 = rho_road
    t8 = t7 + abs(rho8 - rho7) / rho_dot
    t9 = t8 + tuning.t_stabilize

    times = np.array([0.0, t1, t2, t3, t4, t5, t6, t7, t8, t9])
    rhos = np.array([rho0, rho1, rho2, rho3, rho4, rho5, rho6, rho7, rho8,
                     rho_road])
    vels = np.array([v0] + [v] * 9)
    return CurvatureProfile(times=times, rhos=rhos, vels=vels, psi0=psi0,
                            direction="left")


def presample_profile(profile: CurvatureProfile, dt: float) -> SampledPath:
    """Discrete Fresnel integration of the profile on a uniform grid.

    psi(k) = psi(k-1) + rho(k) v(k) dt, y(k) = y(k-1) + sin(psi(k)) v(k) dt,
    and x(k) = x(k-1) + cos(psi(k)) v(k) dt for the longitudinal coordinate.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    n = max(1, math.ceil(profile.duration / dt - 1e-12))
    t = profile.times[0] + dt * np.arange(n + 1)
    rho = profile.rho_at(t)
    v = profile.v_at(t)
    psi = np.empty_like(t)
    psi[0] = profile.psi0
    np.cumsum(rho[1:] * v[1:] * dt, out=psi[1:])
    psi[1:] += profile.psi0
    x = np.empty_like(t)
    y = np.empty_like(t)
    x[0] = 0.0
    y[0] = 0.0
    np.cumsum(np.cos(psi[1:]) * v[1:] * dt, out=x[1:])
    np.cumsum(np.sin(psi[1:]) * v[1:] * dt, out=y[1:])
    return SampledPath(t=t, x=x, y=y, psi=psi, rho=rho, v=v, profile=profile,
                       side=profile.direction)


def generate_path_set(init: EgoState, cap: CapabilityRecord,
                      space: DriveableSpace, tuning: PathTuning,
                      side: str = "left") -> PathSet:
    """Family of n_tot paths scaled to the corridor extent on one side.

    The maximum-severity profile is built and pre-sampled; when its terminal
    offset exceeds the available lateral room the whole family is scaled by
    y_desired / y_max, and path n additionally by sqrt(n / n_tot) on both the
    curvature and heading caps.
    """
    try:
        severe = build_max_severity_profile(init, cap, tuning, side)
    except InfeasibleProfile as exc:
        raise NoFeasiblePath(str(exc)) from exc
    if abs(severe.rhos[2]) < 1e-12:
        raise NoFeasiblePath(f"no curvature authority on the {side} side")
    sampled = presample_profile(severe, tuning.dt_presample)
    y_max = abs(sampled.terminal_offset)
    if y_max < 1e-9:
        raise NoFeasiblePath(f"no lateral authority on the {side} side")

    x_reach = init.X + float(np.max(sampled.x))
    y_desired = space.lateral_extent(side, init.Y, init.X, x_reach)
    if y_desired < tuning.min_lateral_clearance:
        raise NoFeasiblePath(
            f"{side} corridor of {y_desired:.2f} m is below the "
            f"{tuning.min_lateral_clearance:.2f} m clearance")

    scale = min(1.0, y_desired / y_max)
    origin = Pose(init.X, init.Y, 0.0)
    paths: list[SampledPath] = []
    for n in range(1, tuning.n_tot + 1):
        f = scale * math.sqrt(n / tuning.n_tot)
        cap_n = replace(cap, rho_max=f * cap.rho_max)
        tun_n = replace(tuning, psi_max=f * tuning.psi_max)
        try:
            prof_n = build_max_severity_profile(init, cap_n, tun_n, side)
        except InfeasibleProfile:
            continue
        if abs(prof_n.rhos[2]) < 1e-12:
            continue
        path = anchor_path(presample_profile(prof_n, tuning.dt_presample),
                           origin)
        path.index = n
        path.path_id = f"{side[0].upper()}{n}"
        paths.append(path)
    if not paths:
        raise NoFeasiblePath(f"all {side} profiles infeasible")
    return PathSet(paths=paths, side=side, scale=scale, y_desired=y_desired)


def replan(current: EgoState, space: DriveableSpace, cap: CapabilityRecord,
           tuning: PathTuning, side: str = "left") -> PathSet:
    """Regenerate the path family from a mid-manoeuvre state.

    Identical pipeline to generate_path_set; the initial curvature and
    heading come from the current vehicle state, so the replanned paths join
    the current motion continuously.
    """
    return generate_path_set(current, cap, space, tuning, side)
