"""Triggering and supervisory control: time-to-evade, time-to-collision,
the warning/engage inequalities and the state machine that owns the
manoeuvre lifecycle."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .capability import EgoState
from .geometry import Footprint, Pose, collision_check
from .pathgen import CurvatureProfile, SampledPath

logger = logging.getLogger(__name__)


@dataclass
class TriggerConfig:
    t_margin: float = 0.15       # engage window on top of the TTE [s]
    t_warning: float = 0.3      # warning lead time [s]
    tte_reduction: float = 0.0  # constant subtracted from the evasive duration [s]
    ttc_horizon: float = 5.0    # look-ahead for the no-action check [s]

    def __post_init__(self) -> None:
        if min(self.t_margin, self.t_warning, self.tte_reduction) < 0:
            raise ValueError("trigger times must be non-negative")


class Trigger(Enum):
    NONE = "none"
    WARN = "warn"
    ENGAGE = "engage"


class AesState(Enum):
    OFF = "off"
    STANDBY = "standby"
    MONITORING = "monitoring"
    WARNING = "warning"
    IN_REGULATION = "in_regulation"
    ABORTED = "aborted"


@dataclass
class SupervisorState:
    state: AesState = AesState.STANDBY
    selected_path: SampledPath | None = None
    engage_time: float | None = None
    abort_reason: str | None = None


@dataclass
class SupervisorEvents:
    """Per-tick inputs to the state machine, computed by the pipeline."""

    targets_present: bool = False
    perception_ok: bool = True
    trigger: Trigger = Trigger.NONE
    path_valid: bool = True
    candidate_path: SampledPath | None = None
    replanned_path: SampledPath | None = None
    manoeuvre_complete: bool = False
    system_error: bool = False
    reinitialize: bool = False
    shutdown: bool = False
    now: float = 0.0


def compute_tte(profile: CurvatureProfile, cfg: TriggerConfig) -> float:
    """Time to evade: evasive-phase duration shortened by the tunable factor."""
    return max(0.0, (profile.t8 - float(profile.times[0])) - cfg.tte_reduction)


def compute_ttc(ego: EgoState, targets, fp: Footprint,
                horizon: float = 5.0, dt_check: float = 0.1) -> float:
    """Earliest predicted collision time of the no-action path, inf if clear.

    The no-action path holds the current speed and heading. Targets whose
    prediction ends early are held at their last pose by the collision check.
    """
    if not targets:
        return math.inf
    n = max(2, int(round(horizon / dt_check)) + 1)
    t = np.linspace(0.0, horizon, n)
    x = ego.X + ego.v_x * math.cos(ego.psi) * t
    y = ego.Y + ego.v_x * math.sin(ego.psi) * t
    path = SampledPath(t=t, x=x, y=y, psi=np.full(n, ego.psi),
                       rho=np.zeros(n), v=np.full(n, ego.v_x), frame=Pose())
    report = collision_check(path, targets, fp, dt_check)
    if report.collides:
        return float(report.first_collision_time)
    return math.inf


def evaluate_triggers(ttc: float, tte: float, cfg: TriggerConfig) -> Trigger:
    """Engage inside [TTE, TTE + t_margin]; warn within t_warning above it."""
    if tte <= ttc <= tte + cfg.t_margin:
        return Trigger.ENGAGE
    if ttc <= tte + cfg.t_margin + cfg.t_warning:
        return Trigger.WARN
    return Trigger.NONE


_TRIGGERLESS_STATES = (AesState.OFF, AesState.STANDBY, AesState.ABORTED)


def _illegal(s: SupervisorState, ev: SupervisorEvents) -> str | None:
    if ev.trigger is not Trigger.NONE and s.state in _TRIGGERLESS_STATES:
        return f"trigger {ev.trigger.value} while {s.state.value}"
    if s.state is not AesState.IN_REGULATION and (
            ev.replanned_path is not None or ev.manoeuvre_complete
            or not ev.path_valid):
        return f"regulation event while {s.state.value}"
    return None


def step_state_machine(s: SupervisorState,
                       ev: SupervisorEvents) -> SupervisorState:
    """One supervisor transition; deterministic and side-effect free.

    Event combinations unreachable by construction are rejected: the state is
    returned unchanged and the combination is logged.
    """
    reason = _illegal(s, ev)
    if reason is not None:
        logger.warning("illegal event rejected (%s)", reason)
        return replace(s)

    if s.state is AesState.OFF:
        if ev.reinitialize:
            return SupervisorState(AesState.STANDBY)
        return replace(s)

    if s.state is AesState.ABORTED:
        if ev.shutdown:
            return SupervisorState(AesState.OFF)
        if ev.reinitialize:
            return SupervisorState(AesState.STANDBY)
        return replace(s)

    if ev.system_error:
        return SupervisorState(AesState.ABORTED, abort_reason="system error")

    if s.state is AesState.STANDBY:
        if ev.targets_present and ev.perception_ok:
            return SupervisorState(AesState.MONITORING)
        return replace(s)

    if s.state is AesState.MONITORING:
        if not ev.targets_present or not ev.perception_ok:
            return SupervisorState(AesState.STANDBY)
        if ev.trigger is not Trigger.NONE and ev.candidate_path is not None:
            # an engage-grade trigger still passes through the warning state
            return SupervisorState(AesState.WARNING,
                                   selected_path=ev.candidate_path)
        return replace(s)

    if s.state is AesState.WARNING:
        if ev.trigger is Trigger.NONE:
            return SupervisorState(AesState.MONITORING)
        if ev.trigger is Trigger.ENGAGE:
            if ev.candidate_path is None:
                return SupervisorState(AesState.ABORTED,
                                       abort_reason="no feasible path at engage")
            return SupervisorState(AesState.IN_REGULATION,
                                   selected_path=ev.candidate_path,
                                   engage_time=ev.now)
        return replace(s, selected_path=ev.candidate_path or s.selected_path)

    if s.state is AesState.IN_REGULATION:
        if ev.manoeuvre_complete:
            return SupervisorState(AesState.MONITORING)
        if not ev.path_valid:
            if ev.replanned_path is not None:
                return replace(s, selected_path=ev.replanned_path)
            return SupervisorState(AesState.ABORTED,
                                   abort_reason="replanning failed")
        return replace(s)

    raise AssertionError(f"unhandled state {s.state}")
