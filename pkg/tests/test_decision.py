import itertools
import math

import numpy as np
import pytest

from aessim.capability import EgoState
from aessim.decision import (AesState, SupervisorEvents, SupervisorState,
                             Trigger, TriggerConfig, compute_ttc, compute_tte,
                             evaluate_triggers, step_state_machine)
from aessim.geometry import Footprint, Pose, TargetTrack
from aessim.pathgen import CurvatureProfile, SampledPath

FP = Footprint(4.5, 1.8, ref_offset=1.35)


def profile_with_t8(t8: float, t9: float | None = None) -> CurvatureProfile:
    times = np.linspace(0.0, t8, 9)
    times = np.append(times, t9 if t9 is not None else t8 + 0.5)
    return CurvatureProfile(times=times, rhos=np.zeros(10),
                            vels=np.full(10, 20.0), psi0=0.0, direction="left")


def dummy_path() -> SampledPath:
    t = 0.01 * np.arange(100)
    return SampledPath(t=t, x=20 * t, y=0 * t, psi=0 * t, rho=0 * t,
                       v=np.full(100, 20.0))


class TestTte:
    def test_basic(self):
        cfg = TriggerConfig(tte_reduction=0.3)
        assert compute_tte(profile_with_t8(1.5), cfg) == pytest.approx(1.2)

    def test_floor(self):
        cfg = TriggerConfig(tte_reduction=2.0)
        assert compute_tte(profile_with_t8(1.5), cfg) == 0.0

    def test_recomputation(self):
        prof = profile_with_t8(1.234)
        cfg = TriggerConfig(tte_reduction=0.4)
        assert compute_tte(prof, cfg) == (prof.t8 - prof.times[0]) - 0.4


class TestTtc:
    def test_point_target_head_on(self):
        ego = EgoState(v_x=20.0)
        target = TargetTrack.constant_velocity(
            "pt", Footprint(0.0, 0.0), Pose(20.0, 0.0, 0.0), 0.0, 6.0)
        got = compute_ttc(ego, [target], Footprint(0.0, 0.0), horizon=5.0)
        assert got == pytest.approx(1.0, abs=1e-9)

    def test_laterally_clear(self):
        ego = EgoState(v_x=20.0)
        target = TargetTrack.constant_velocity(
            "side", Footprint(0.5, 0.5), Pose(40.0, 6.0, 0.0), 0.0, 6.0)
        assert compute_ttc(ego, [target], FP) == math.inf

    def test_no_targets(self):
        assert compute_ttc(EgoState(v_x=20.0), [], FP) == math.inf

    def test_decreasing_while_closing(self):
        # receding start time against a static obstacle: TTC falls 1:1
        target_pose = Pose(80.0, 0.0, 0.0)
        prev = math.inf
        for x_ego in np.arange(0.0, 60.0, 5.0):
            target = TargetTrack.constant_velocity(
                "blk", Footprint(0.5, 0.5), target_pose, 0.0, 6.0)
            ttc = compute_ttc(EgoState(X=float(x_ego), v_x=20.0), [target], FP)
            assert ttc < prev
            prev = ttc


class TestTriggers:
    CFG = TriggerConfig(t_margin=0.2, t_warning=0.3, tte_reduction=0.0)

    def test_engage_window(self):
        assert evaluate_triggers(1.3, 1.2, self.CFG) is Trigger.ENGAGE

    def test_warning_band(self):
        assert evaluate_triggers(1.6, 1.2, self.CFG) is Trigger.WARN

    def test_inf_ttc(self):
        assert evaluate_triggers(math.inf, 1.2, self.CFG) is Trigger.NONE

    def test_window_missed_stays_warn(self):
        assert evaluate_triggers(0.5, 1.2, self.CFG) is Trigger.WARN

    def test_boundaries(self):
        assert evaluate_triggers(1.2, 1.2, self.CFG) is Trigger.ENGAGE
        assert evaluate_triggers(1.4, 1.2, self.CFG) is Trigger.ENGAGE
        assert evaluate_triggers(1.7, 1.2, self.CFG) is Trigger.WARN
        assert evaluate_triggers(1.71, 1.2, self.CFG) is Trigger.NONE


class TestStateMachine:
    def test_standby_to_monitoring(self):
        s = SupervisorState(AesState.STANDBY)
        out = step_state_machine(s, SupervisorEvents(targets_present=True))
        assert out.state is AesState.MONITORING

    def test_monitoring_back_to_standby(self):
        s = SupervisorState(AesState.MONITORING)
        out = step_state_machine(s, SupervisorEvents(targets_present=False))
        assert out.state is AesState.STANDBY
        out = step_state_machine(s, SupervisorEvents(targets_present=True,
                                                     perception_ok=False))
        assert out.state is AesState.STANDBY

    def test_monitoring_to_warning_requires_candidate(self):
        s = SupervisorState(AesState.MONITORING)
        ev = SupervisorEvents(targets_present=True, trigger=Trigger.WARN)
        assert step_state_machine(s, ev).state is AesState.MONITORING
        ev.candidate_path = dummy_path()
        out = step_state_machine(s, ev)
        assert out.state is AesState.WARNING
        assert out.selected_path is ev.candidate_path

    def test_engage_passes_through_warning(self):
        s = SupervisorState(AesState.MONITORING)
        ev = SupervisorEvents(targets_present=True, trigger=Trigger.ENGAGE,
                              candidate_path=dummy_path())
        out = step_state_machine(s, ev)
        assert out.state is AesState.WARNING

    def test_warning_to_in_regulation(self):
        path = dummy_path()
        s = SupervisorState(AesState.WARNING, selected_path=path)
        ev = SupervisorEvents(targets_present=True, trigger=Trigger.ENGAGE,
                              candidate_path=path, now=2.5)
        out = step_state_machine(s, ev)
        assert out.state is AesState.IN_REGULATION
        assert out.engage_time == 2.5
        assert out.selected_path is path

    def test_warning_relaxes_to_monitoring(self):
        s = SupervisorState(AesState.WARNING, selected_path=dummy_path())
        out = step_state_machine(s, SupervisorEvents(targets_present=True,
                                                     trigger=Trigger.NONE))
        assert out.state is AesState.MONITORING
        assert out.selected_path is None

    def test_engage_without_candidate_aborts(self):
        s = SupervisorState(AesState.WARNING, selected_path=dummy_path())
        ev = SupervisorEvents(targets_present=True, trigger=Trigger.ENGAGE)
        out = step_state_machine(s, ev)
        assert out.state is AesState.ABORTED

    def test_regulation_completion(self):
        s = SupervisorState(AesState.IN_REGULATION, selected_path=dummy_path(),
                            engage_time=1.0)
        out = step_state_machine(s, SupervisorEvents(targets_present=True,
                                                     manoeuvre_complete=True))
        assert out.state is AesState.MONITORING

    def test_regulation_replanned_substitution(self):
        old = dummy_path()
        new = dummy_path()
        s = SupervisorState(AesState.IN_REGULATION, selected_path=old,
                            engage_time=1.0)
        ev = SupervisorEvents(targets_present=True, path_valid=False,
                              replanned_path=new)
        out = step_state_machine(s, ev)
        assert out.state is AesState.IN_REGULATION
        assert out.selected_path is new
        assert out.engage_time == 1.0

    def test_regulation_replanning_failure_aborts(self):
        s = SupervisorState(AesState.IN_REGULATION, selected_path=dummy_path(),
                            engage_time=1.0)
        ev = SupervisorEvents(targets_present=True, path_valid=False)
        out = step_state_machine(s, ev)
        assert out.state is AesState.ABORTED
        assert out.abort_reason == "replanning failed"

    def test_system_error_aborts(self):
        for state in (AesState.MONITORING, AesState.WARNING,
                      AesState.IN_REGULATION):
            s = SupervisorState(state, selected_path=dummy_path()
                                if state is not AesState.MONITORING else None,
                                engage_time=0.0
                                if state is AesState.IN_REGULATION else None)
            out = step_state_machine(s, SupervisorEvents(targets_present=True,
                                                         system_error=True))
            assert out.state is AesState.ABORTED

    def test_aborted_reinitialize_and_shutdown(self):
        s = SupervisorState(AesState.ABORTED, abort_reason="x")
        assert step_state_machine(
            s, SupervisorEvents(reinitialize=True)).state is AesState.STANDBY
        assert step_state_machine(
            s, SupervisorEvents(shutdown=True)).state is AesState.OFF
        assert step_state_machine(s, SupervisorEvents()).state is AesState.ABORTED

    def test_off_reinitialize(self):
        s = SupervisorState(AesState.OFF)
        assert step_state_machine(
            s, SupervisorEvents(reinitialize=True)).state is AesState.STANDBY

    def test_illegal_engage_while_off(self):
        s = SupervisorState(AesState.OFF)
        ev = SupervisorEvents(targets_present=True, trigger=Trigger.ENGAGE,
                              reinitialize=True)
        out = step_state_machine(s, ev)
        assert out.state is AesState.OFF  # event rejected wholesale

    def test_illegal_regulation_event_while_monitoring(self):
        s = SupervisorState(AesState.MONITORING)
        ev = SupervisorEvents(targets_present=True, manoeuvre_complete=True)
        assert step_state_machine(s, ev).state is AesState.MONITORING

    def test_exhaustive_closure_and_determinism(self):
        states = list(AesState)
        path = dummy_path()
        bools = (False, True)
        count = 0
        for state in states:
            base = SupervisorState(
                state,
                selected_path=path if state in (AesState.WARNING,
                                                AesState.IN_REGULATION) else None,
                engage_time=1.0 if state is AesState.IN_REGULATION else None)
            for combo in itertools.product(bools, bools, list(Trigger), bools,
                                           bools, bools, bools, bools, bools,
                                           bools):
                (tp, pok, trig, pv, cand, repl, done, err, reinit,
                 down) = combo
                ev = SupervisorEvents(
                    targets_present=tp, perception_ok=pok, trigger=trig,
                    path_valid=pv,
                    candidate_path=path if cand else None,
                    replanned_path=path if repl else None,
                    manoeuvre_complete=done, system_error=err,
                    reinitialize=reinit, shutdown=down, now=3.0)
                out1 = step_state_machine(base, ev)
                out2 = step_state_machine(base, ev)
                assert out1.state in states
                assert out1.state == out2.state
                assert (out1.selected_path is None) == \
                    (out1.state not in (AesState.WARNING,
                                        AesState.IN_REGULATION))
                assert (out1.engage_time is None) == \
                    (out1.state is not AesState.IN_REGULATION)
                count += 1
        assert count == len(states) * 2**9 * len(Trigger)
