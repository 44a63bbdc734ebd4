"""Closed-loop scenario orchestration.

One deterministic loop steps the plant at dt_plant, the controller and
supervisor at dt_control and the planner at planner_period. Each planner
cycle recomputes the capability, generates and ranks path sets on the
configured sides, refreshes the time-to-evade of the best candidate and,
once in regulation, monitors the active path and replans when it becomes
invalid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .capability import (CapabilityRecord, CapabilityScenario, EgoState,
                         lateral_capability)
from .control import (ControlCommand, control_step, path_to_vehicle_frame,
                      tracking_errors)
from .decision import (AesState, SupervisorEvents, SupervisorState, Trigger,
                       compute_ttc, compute_tte, evaluate_triggers,
                       step_state_machine)
from .errors import (DegenerateSpeed, NoFeasiblePath, NumericalDivergence,
                     PathExhausted)
from .geometry import Pose, TargetTrack, sat_check
from .pathgen import SampledPath, generate_path_set, replan
from .plant import (PlantState, assert_stable_vehicle, lateral_acceleration,
                    plant_step)
from .ranking import RankedPath, rank_paths, select_path
from .ranking import monitor_selected as _monitor_selected
from .scenario import ScenarioConfig
from .trace import TraceLog

OUTCOME_AVOIDED = "avoided"
OUTCOME_COLLIDED = "collided"
OUTCOME_ABORTED = "aborted"
OUTCOME_NO_TRIGGER = "no-trigger"

EXIT_CODES = {
    OUTCOME_AVOIDED: 0,
    OUTCOME_NO_TRIGGER: 0,
    OUTCOME_COLLIDED: 1,
    OUTCOME_ABORTED: 2,
}

_NO_PREBRAKE = {
    CapabilityScenario.BRAKE_STEER: CapabilityScenario.STEER,
    CapabilityScenario.BRAKE_DIFF: CapabilityScenario.DIFF,
    CapabilityScenario.BRAKE_STEER_DIFF: CapabilityScenario.STEER_DIFF,
}


@dataclass
class RunResult:
    outcome: str
    reason: str
    summary: dict
    trace: TraceLog

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.outcome]


@dataclass
class _Regulation:
    """Book-keeping for the active manoeuvre."""

    path: SampledPath
    anchor: float
    capability: CapabilityRecord
    prebrake_until: float


def _predictions(cfg: ScenarioConfig, t: float, horizon: float,
                 dt: float) -> list[TargetTrack]:
    """Constant-velocity predictions from the current true target states."""
    tracks = []
    for td in cfg.targets:
        if t < td.appear_time:
            continue
        tracks.append(TargetTrack.constant_velocity(
            td.track_id, td.footprint, td.position_at(t), td.speed_at(t),
            horizon, dt, td.type_tag))
    return tracks


def _ego_state(plant: PlantState, a_x: float = 0.0) -> EgoState:
    return EgoState(X=plant.X, Y=plant.Y, psi=plant.psi, v_x=plant.u_v,
                    a_x=a_x, yaw_rate=plant.r)


def run_scenario(cfg: ScenarioConfig) -> RunResult:
    """Run one scenario to completion and return the outcome and trace."""
    params, fp = cfg.vehicle, cfg.footprint
    assert_stable_vehicle(params, cfg.ego.v_x)
    space = cfg.build_space()
    trace = TraceLog([td.track_id for td in cfg.targets])

    plant = PlantState(u_v=cfg.ego.v_x, X=cfg.ego.X, Y=cfg.ego.Y,
                       psi=cfg.ego.psi)
    sup = SupervisorState(AesState.STANDBY)

    dt_ctrl = cfg.sim.dt_control
    substeps = round(dt_ctrl / cfg.sim.dt_plant)
    planner_every = round(cfg.sim.planner_period / dt_ctrl)
    n_ticks = round(cfg.sim.duration / dt_ctrl)
    pred_horizon = max(cfg.trigger.ttc_horizon, 6.0)

    candidate: SampledPath | None = None
    last_ranked: list[RankedPath] = []
    tte: float | None = None
    reg: _Regulation | None = None
    engaged_ever = False
    force_complete = False
    outcome = None
    reason = ""
    engage_info: dict = {}
    max_abs_ay = 0.0
    max_abs_ye = 0.0
    min_dist = {td.track_id: math.inf for td in cfg.targets}

    def plan_cycle(t: float, preds,
                   kind: str = "plan") -> tuple[SampledPath | None,
                                                list[RankedPath]]:
        try:
            cap = lateral_capability(cfg.cap_scenario, params,
                                     _ego_state(plant), cfg.cap_tuning)
        except DegenerateSpeed:
            return None, []
        ranked_all: list[RankedPath] = []
        for side in cfg.sides:
            try:
                ps = generate_path_set(_ego_state(plant), cap, space,
                                       cfg.path_tuning, side)
            except NoFeasiblePath:
                continue
            ps.generation_time = t
            ranked_all.extend(rank_paths(ps, preds, space, fp, cfg.weights,
                                         cfg.sim.dt_check))
        for r in ranked_all:
            trace.add_path_event(
                t=t, kind=kind, side=r.path.side, index=r.path.index,
                path_id=r.path.path_id,
                status=r.rejected or "survivor",
                severity=r.severity if r.rejected is None else None,
                proximity=r.proximity if r.rejected is None else None,
                total=r.total if r.rejected is None else None,
                terminal_y=r.path.terminal_offset)
        return select_path(ranked_all, dt_ctrl), ranked_all

    def try_replan(t: float, preds) -> SampledPath | None:
        scenario = _NO_PREBRAKE.get(cfg.cap_scenario, cfg.cap_scenario)
        try:
            cap = lateral_capability(scenario, params, _ego_state(plant),
                                     cfg.cap_tuning)
            ps = replan(_ego_state(plant), space, cap, cfg.path_tuning,
                        side=reg.path.side)
        except (DegenerateSpeed, NoFeasiblePath):
            return None
        ps.generation_time = t
        ranked = rank_paths(ps, preds, space, fp, cfg.weights,
                            cfg.sim.dt_check)
        for r in ranked:
            trace.add_path_event(
                t=t, kind="replan", side=r.path.side, index=r.path.index,
                path_id=r.path.path_id, status=r.rejected or "survivor",
                severity=r.severity if r.rejected is None else None,
                proximity=r.proximity if r.rejected is None else None,
                total=r.total if r.rejected is None else None,
                terminal_y=r.path.terminal_offset)
        return select_path(ranked, dt_ctrl)

    for k in range(n_ticks + 1):
        t = k * dt_ctrl
        preds = _predictions(cfg, t, pred_horizon, cfg.sim.dt_check)
        targets_present = bool(preds)
        planner_tick = (k % planner_every == 0)

        events = SupervisorEvents(targets_present=targets_present, now=t)
        ttc = math.inf
        ttc_evaluated = False
        trigger_evaluated = False

        if sup.state in (AesState.MONITORING, AesState.WARNING):
            fresh_candidate = False
            ttc_evaluated = targets_present
            if not targets_present:
                candidate, tte = None, None
            elif planner_tick:
                candidate, last_ranked = plan_cycle(t, preds)
                tte = (compute_tte(candidate.profile, cfg.trigger)
                       if candidate is not None and candidate.profile else None)
                fresh_candidate = True
            ttc = compute_ttc(_ego_state(plant), preds, fp,
                              cfg.trigger.ttc_horizon, cfg.sim.dt_check)
            if tte is not None and candidate is not None:
                events.trigger = evaluate_triggers(ttc, tte, cfg.trigger)
                trigger_evaluated = True
            if (events.trigger is Trigger.ENGAGE
                    and sup.state is AesState.WARNING and not fresh_candidate):
                # regenerate at the engage tick so the executed path starts
                # exactly at the current vehicle state
                candidate, last_ranked = plan_cycle(t, preds,
                                                    kind="engage_plan")
                tte = (compute_tte(candidate.profile, cfg.trigger)
                       if candidate is not None and candidate.profile else None)
                events.trigger = (evaluate_triggers(ttc, tte, cfg.trigger)
                                  if tte is not None and candidate is not None
                                  else Trigger.NONE)
            events.candidate_path = candidate

        if sup.state is AesState.IN_REGULATION and reg is not None:
            tau = t - reg.anchor
            complete = force_complete or tau >= reg.path.profile.duration - 1e-9
            events.manoeuvre_complete = complete
            if not complete and planner_tick:
                verdict = _monitor_selected(reg.path.suffix_from(tau), preds,
                                            space, fp, cfg.sim.dt_check)
                if not verdict.valid:
                    events.path_valid = False
                    replanned = try_replan(t, preds)
                    events.replanned_path = replanned
                    if replanned is not None:
                        trace.add_replan_event(
                            t, verdict.reason,
                            rho0_path=float(replanned.profile.rhos[0]),
                            rho0_plant=plant.r / plant.u_v)

        prev = sup
        sup = step_state_machine(sup, events)

        if sup.state is AesState.IN_REGULATION:
            if prev.state is not AesState.IN_REGULATION:
                engaged_ever = True
                cap = candidate.profile.capability
                t_pb = (cfg.cap_tuning.t_pb if cap.scenario.pre_braking else 0.0)
                reg = _Regulation(path=sup.selected_path, anchor=t,
                                  capability=cap, prebrake_until=t + t_pb)
                engage_info = {
                    "engage_time": t, "engage_ttc": ttc, "engage_tte": tte,
                    "engage_path_id": sup.selected_path.path_id,
                    "engage_side": sup.selected_path.side,
                    "engage_speed": plant.u_v,
                }
                trace.snapshot_candidates(_mark_selected(last_ranked,
                                                         sup.selected_path))
            elif sup.selected_path is not reg.path:
                reg = replace(reg, path=sup.selected_path, anchor=t)
                force_complete = False

        # control and actuation for this tick
        cmd = ControlCommand()
        a_x_cmd = 0.0
        y_e = psi_e = None
        if sup.state is AesState.IN_REGULATION:
            if t < reg.prebrake_until:
                a_x_cmd = reg.capability.a_x_min
            local = path_to_vehicle_frame(
                reg.path, Pose(plant.X, plant.Y, plant.psi))
            try:
                err = tracking_errors(local, plant)
                cmd = control_step(err, plant, params, cfg.controller)
                y_e, psi_e = err.y_e, err.psi_e
                max_abs_ye = max(max_abs_ye, abs(err.y_e))
            except PathExhausted:
                force_complete = True

        a_y = lateral_acceleration(plant, cmd, params)
        max_abs_ay = max(max_abs_ay, abs(a_y))

        # ground truth contact check and per-target distances
        collided_with = None
        ego_pose = Pose(plant.X, plant.Y, plant.psi)
        ecx, ecy = fp.center(ego_pose)
        row = {
            "t": t, "state": sup.state.value, "X": plant.X, "Y": plant.Y,
            "psi": plant.psi, "u_v": plant.u_v, "v_v": plant.v_v,
            "r": plant.r, "a_y": a_y, "ay_sat": plant.ay_saturated,
            "ttc": ttc if ttc_evaluated else None,
            "tte": tte if trigger_evaluated else None,
            "trigger": events.trigger.value,
            "path_id": (reg.path.path_id
                        if sup.state is AesState.IN_REGULATION else None),
            "y_e": y_e, "psi_e": psi_e, "delta_g": cmd.delta_g,
            "M_z": cmd.M_z_ext, "F_fl": cmd.brakes.fl, "F_fr": cmd.brakes.fr,
            "F_rl": cmd.brakes.rl, "F_rr": cmd.brakes.rr,
        }
        for td in cfg.targets:
            tp = td.position_at(t)
            tcx, tcy = td.footprint.center(tp)
            d = math.hypot(tcx - ecx, tcy - ecy)
            min_dist[td.track_id] = min(min_dist[td.track_id], d)
            row[f"dist_{td.track_id}"] = d
            row[f"X_{td.track_id}"] = tp.X
            row[f"Y_{td.track_id}"] = tp.Y
            if (t >= td.appear_time
                    and d <= fp.circumscribed_radius
                    + td.footprint.circumscribed_radius
                    and sat_check(ego_pose, fp, tp, td.footprint)):
                collided_with = td.track_id
        trace.add_row(**row)

        if collided_with is not None:
            outcome, reason = OUTCOME_COLLIDED, f"contact with {collided_with}"
            break
        if sup.state is AesState.ABORTED:
            outcome, reason = OUTCOME_ABORTED, sup.abort_reason or "aborted"
            break
        if (prev.state is AesState.IN_REGULATION
                and sup.state is AesState.MONITORING):
            outcome, reason = OUTCOME_AVOIDED, "manoeuvre completed"
            break

        # advance the plant to the next tick
        if k < n_ticks:
            try:
                for _ in range(substeps):
                    plant = plant_step(plant, cmd, params, a_x_cmd,
                                       cfg.sim.dt_plant)
            except NumericalDivergence as exc:
                outcome, reason = OUTCOME_ABORTED, str(exc)
                break

    if outcome is None:
        outcome = OUTCOME_AVOIDED if engaged_ever else OUTCOME_NO_TRIGGER
        reason = "duration reached"

    summary = {
        "schema_version": 1,
        "scenario": cfg.name,
        "outcome": outcome,
        "reason": reason,
        "final_state": sup.state.value,
        "t_end": plant.t,
        "engaged": engaged_ever,
        "max_abs_ay": max_abs_ay,
        "max_abs_ye": max_abs_ye,
        "min_distance": {k: (v if math.isfinite(v) else None)
                         for k, v in min_dist.items()},
        "t_margin": cfg.trigger.t_margin,
        "tte_reduction": cfg.trigger.tte_reduction,
    }
    summary.update(engage_info)
    if engage_info:
        erow = trace.row_at_time(engage_info["engage_time"])
        if erow is not None:
            summary["engage_distances"] = {
                td.track_id: erow[trace.column_index(f"dist_{td.track_id}")]
                for td in cfg.targets}
    trace.summary = summary
    return RunResult(outcome=outcome, reason=reason, summary=summary,
                     trace=trace)


def _mark_selected(ranked: list[RankedPath],
                   selected: SampledPath) -> list[RankedPath]:
    out = []
    for r in ranked:
        if r.rejected is None and r.path.path_id == selected.path_id \
                and r.path.side == selected.side:
            out.append(replace(r, rejected="selected"))
        else:
            out.append(r)
    return out
