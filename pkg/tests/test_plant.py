import math

import numpy as np
import pytest

from aessim.capability import VehicleParams
from aessim.control import ControlCommand, WheelForces
from aessim.errors import NumericalDivergence, PredictionGap
from aessim.geometry import Footprint, Pose, TargetTrack
from aessim.plant import (PlantState, assert_stable_vehicle,
                          lateral_matrices, plant_step, target_step,
                          vehicle_poles)


def make_params(**kw):
    base = dict(m=2000.0, a=1.4, b=1.6, h_cog=0.55, w=1.6, C_f=1e5, C_r=1e5,
                I_zz=3500.0, delta_max=0.3)
    base.update(kw)
    return VehicleParams(**base)


def run(plant, cmd, params, seconds, dt=0.001, a_x=0.0):
    for _ in range(int(round(seconds / dt))):
        plant = plant_step(plant, cmd, params, a_x, dt)
    return plant


class TestLateralDynamics:
    def test_zero_input_equilibrium(self):
        p = make_params()
        out = run(PlantState(u_v=20.0), ControlCommand(), p, 2.0)
        assert out.v_v == 0.0
        assert out.r == 0.0
        assert out.Y == 0.0

    def test_straight_line_exactness(self):
        p = make_params()
        out = run(PlantState(u_v=20.0), ControlCommand(), p, 3.0)
        assert out.X == pytest.approx(60.0, abs=1e-9)
        assert out.psi == 0.0

    def test_steady_state_yaw_rate_matches_circle_solution(self):
        p = make_params()
        delta = 0.02
        out = run(PlantState(u_v=20.0), ControlCommand(delta_g=delta), p, 5.0)
        k_v = p.m * (p.b * p.C_r - p.a * p.C_f) / (p.l * p.C_f * p.C_r)
        r_ss = 20.0 * delta / (p.l + k_v * 400.0)
        assert out.r == pytest.approx(r_ss, abs=1e-6)

    def test_moment_step_matches_linear_solve(self):
        p = make_params()
        m_ext = 1000.0
        out = run(PlantState(u_v=20.0), ControlCommand(
            M_z_ext=m_ext, brakes=WheelForces()), p, 5.0)
        A, B = lateral_matrices(p, 20.0)
        v_ss, r_ss = np.linalg.solve(A, -B @ np.array([0.0, m_ext]))
        assert out.r == pytest.approx(r_ss, abs=1e-6)
        assert out.v_v == pytest.approx(v_ss, abs=1e-6)
        assert out.r > 0  # positive moment yaws counter-clockwise

    def test_rk4_convergence(self):
        p = make_params()
        cmd = ControlCommand(delta_g=0.05)
        a = run(PlantState(u_v=20.0), cmd, p, 3.0, dt=0.001)
        b = run(PlantState(u_v=20.0), cmd, p, 3.0, dt=0.0005)
        assert math.hypot(a.X - b.X, a.Y - b.Y) < 1e-6

    def test_divergence_guard(self):
        p = make_params()
        cmd = ControlCommand(delta_g=0.0, M_z_ext=5e6, brakes=WheelForces())
        with pytest.raises(NumericalDivergence):
            run(PlantState(u_v=20.0), cmd, p, 5.0)

    def test_lateral_force_guard_flags(self):
        p = make_params(mu_f=0.3, mu_r=0.3)
        cmd = ControlCommand(delta_g=0.3)
        out = run(PlantState(u_v=30.0), cmd, p, 1.0)
        assert out.ay_saturated

    def test_prebraking_updates_speed_with_floor(self):
        p = make_params()
        out = run(PlantState(u_v=5.0), ControlCommand(), p, 1.0, a_x=-9.81)
        assert out.u_v == pytest.approx(1.0)
        out = run(PlantState(u_v=20.0), ControlCommand(), p, 0.3, a_x=-9.81)
        assert out.u_v == pytest.approx(20.0 - 9.81 * 0.3, rel=1e-9)

    def test_dt_bounds(self):
        p = make_params()
        with pytest.raises(ValueError):
            plant_step(PlantState(u_v=20.0), ControlCommand(), p, 0.0, 0.02)


class TestPoles:
    def test_reference_set_stable(self):
        p = make_params()
        for u in (5.0, 20.0, 40.0):
            assert np.all(vehicle_poles(p, u).real < 0)
        assert_stable_vehicle(p, 20.0)

    def test_oversteered_set_detected(self):
        # rear-biased stiffness beyond the critical speed
        p = make_params(a=1.9, b=1.1, C_f=1.4e5, C_r=6e4)
        with pytest.raises(ValueError):
            assert_stable_vehicle(p, 40.0)


class TestTargetStep:
    def test_static_target(self):
        tr = TargetTrack.constant_velocity("s", Footprint(1, 1),
                                           Pose(5.0, 2.0, 0.3), 0.0, 4.0)
        for t in (0.0, 1.3, 4.0):
            pose = target_step(tr, t)
            assert pose.X == pytest.approx(5.0)
            assert pose.Y == pytest.approx(2.0)

    def test_crossing_vru_advance(self):
        tr = TargetTrack.constant_velocity(
            "v", Footprint(0.5, 0.5), Pose(0.0, 0.0, math.pi / 2), 1.0, 4.0)
        pose = target_step(tr, 2.0)
        assert pose.Y == pytest.approx(2.0, abs=1e-12)
        assert pose.X == pytest.approx(0.0, abs=1e-12)

    def test_midpoint_interpolation_exact(self):
        tr = TargetTrack.constant_velocity(
            "v", Footprint(0.5, 0.5), Pose(1.0, -2.0, 0.25), 3.0, 4.0, dt=0.5)
        for t in (0.25, 1.75, 3.9):
            pose = target_step(tr, t)
            assert pose.X == pytest.approx(1.0 + 3.0 * math.cos(0.25) * t,
                                           abs=1e-12)
            assert pose.Y == pytest.approx(-2.0 + 3.0 * math.sin(0.25) * t,
                                           abs=1e-12)

    def test_prediction_gap(self):
        tr = TargetTrack.constant_velocity("v", Footprint(0.5, 0.5),
                                           Pose(0, 0, 0), 1.0, 4.0)
        with pytest.raises(PredictionGap):
            target_step(tr, 4.5)
