"""Simulation plant: linear single-track lateral dynamics with an external
yaw-moment input, longitudinal speed update during pre-braking, kinematic
global pose integration and target motion interpolation."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .capability import VehicleParams
from .control import ControlCommand
from .errors import NumericalDivergence
from .geometry import Pose, TargetTrack

V_LAT_LIMIT = 30.0    # sanity bound on lateral velocity [m/s]
YAW_RATE_LIMIT = 5.0  # sanity bound on yaw rate [rad/s]
U_FLOOR = 1.0         # plant never drops below this speed [m/s]


@dataclass
class PlantState:
    u_v: float            # longitudinal velocity [m/s]
    v_v: float = 0.0      # lateral velocity [m/s]
    r: float = 0.0        # yaw rate [rad/s]
    X: float = 0.0
    Y: float = 0.0
    psi: float = 0.0
    t: float = 0.0
    ay_saturated: bool = False  # lateral-force guard active in the last step


def lateral_matrices(params: VehicleParams,
                     u: float) -> tuple[np.ndarray, np.ndarray]:
    """State and input matrices of the lateral dynamics at speed u.

    States are (v_v, r), inputs (delta_g, M_z_ext). Written in the
    negative-stiffness slip convention, so the stored magnitudes are negated.
    """
    c_f, c_r = -params.C_f, -params.C_r
    m, izz, a, b = params.m, params.I_zz, params.a, params.b
    A = np.array([
        [(c_f + c_r) / (m * u), (a * c_f - b * c_r) / (m * u) - u],
        [(a * c_f - b * c_r) / (izz * u), (a**2 * c_f + b**2 * c_r) / (izz * u)],
    ])
    B = np.array([
        [-c_f / m, 0.0],
        [-a * c_f / izz, 1.0 / izz],
    ])
    return A, B


def vehicle_poles(params: VehicleParams, u: float) -> np.ndarray:
    """Open-loop poles of the lateral dynamics at speed u."""
    A, _ = lateral_matrices(params, u)
    return np.linalg.eigvals(A)


def assert_stable_vehicle(params: VehicleParams, u: float) -> None:
    poles = vehicle_poles(params, u)
    if np.any(poles.real >= 0):
        raise ValueError(
            f"vehicle model unstable at u={u:.1f} m/s (poles {poles})")


def plant_step(s: PlantState, cmd: ControlCommand, params: VehicleParams,
               a_x_cmd: float, dt: float) -> PlantState:
    """One fixed-step RK4 integration of the plant.

    The lateral acceleration is capped at the friction limit inside the
    derivative (tyre-force saturation guard); the step is flagged when the
    guard engages. The longitudinal speed follows a_x_cmd and never drops
    below the floor.
    """
    if not (0.0 < dt <= 0.01):
        raise ValueError("dt must lie in (0, 0.01]")
    u = s.u_v
    A, B = lateral_matrices(params, u)
    a11, a12 = A[0]
    a21, a22 = A[1]
    b11 = B[0, 0]
    b21, b22 = B[1]
    ay_max = params.mu_min * params.g
    delta, m_ext = cmd.delta_g, cmd.M_z_ext
    saturated = False

    def deriv(v, r, psi):
        nonlocal saturated
        v_dot = a11 * v + a12 * r + b11 * delta
        r_dot_tire = a21 * v + a22 * r + b21 * delta
        a_y = v_dot + u * r
        if abs(a_y) > ay_max:
            # tyre-force saturation: scale the tyre-generated terms of both
            # rows so the lateral acceleration caps at the friction limit
            saturated = True
            scale = ay_max / abs(a_y)
            v_dot = scale * a_y - u * r
            r_dot_tire *= scale
        r_dot = r_dot_tire + b22 * m_ext
        x_dot = u * math.cos(psi) - v * math.sin(psi)
        y_dot = u * math.sin(psi) + v * math.cos(psi)
        return v_dot, r_dot, x_dot, y_dot, r

    k1 = deriv(s.v_v, s.r, s.psi)
    k2 = deriv(s.v_v + 0.5 * dt * k1[0], s.r + 0.5 * dt * k1[1],
               s.psi + 0.5 * dt * k1[4])
    k3 = deriv(s.v_v + 0.5 * dt * k2[0], s.r + 0.5 * dt * k2[1],
               s.psi + 0.5 * dt * k2[4])
    k4 = deriv(s.v_v + dt * k3[0], s.r + dt * k3[1], s.psi + dt * k3[4])

    def rk(i):
        return dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])

    new = PlantState(
        u_v=max(U_FLOOR, s.u_v + a_x_cmd * dt),
        v_v=float(s.v_v + rk(0)),
        r=float(s.r + rk(1)),
        X=float(s.X + rk(2)),
        Y=float(s.Y + rk(3)),
        psi=float(s.psi + rk(4)),
        t=s.t + dt,
        ay_saturated=saturated,
    )
    if abs(new.v_v) > V_LAT_LIMIT or abs(new.r) > YAW_RATE_LIMIT:
        raise NumericalDivergence(
            f"plant state out of bounds at t={new.t:.3f} "
            f"(v_v={new.v_v:.2f}, r={new.r:.2f})")
    return new


def lateral_acceleration(s: PlantState, cmd: ControlCommand,
                         params: VehicleParams) -> float:
    """Instantaneous lateral acceleration v_dot + u * r (unguarded)."""
    A, B = lateral_matrices(params, s.u_v)
    v_dot = A[0, 0] * s.v_v + A[0, 1] * s.r + B[0, 0] * cmd.delta_g
    return float(v_dot + s.u_v * s.r)


def target_step(track: TargetTrack, t_now: float) -> Pose:
    """Predicted target pose at t_now; raises PredictionGap outside the grid."""
    return track.pose_at(t_now, clamp=False)
