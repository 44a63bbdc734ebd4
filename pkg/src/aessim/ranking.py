"""Path rejection, cost ranking, selection and validity monitoring.

Paths failing the driveable-area check or the collision check are rejected;
survivors are scored with a severity term (RMS-style sums of lateral and
longitudinal acceleration along the path) plus a proximity term (mean of the
per-step minimum distance to any target, sign of the weight left to the
configuration).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGrid
from .geometry import (CollisionReport, DriveableSpace, Footprint,
                       collision_check, driveable_area_check)
from .pathgen import PathSet, SampledPath, anchor_path, presample_profile

REJECT_NOT_DRIVEABLE = "not_driveable"
REJECT_COLLISION = "collision"


@dataclass
class CostWeights:
    K_ay: float = 1.0
    K_ax: float = 1.0
    K_prox: float = 0.0

    def scaled(self, factor: float) -> "CostWeights":
        return CostWeights(self.K_ay * factor, self.K_ax * factor,
                           self.K_prox * factor)


@dataclass
class RankedPath:
    path: SampledPath
    rejected: str | None = None
    severity: float = 0.0
    proximity: float = 0.0
    total: float = 0.0
    report: CollisionReport | None = None


@dataclass
class PathValidity:
    valid: bool
    reason: str | None = None
    report: CollisionReport | None = None


def severity_cost(path: SampledPath, w: CostWeights) -> float:
    """Severity from lateral (v^2 rho) and longitudinal (dv/dt) terms."""
    if len(path) < 2:
        return 0.0
    dt = np.diff(path.t)
    if np.any(dt == 0.0):
        raise DegenerateGrid("repeated timestamps in path grid")
    a_lat = path.v ** 2 * path.rho
    a_lon = np.diff(path.v) / dt
    return (w.K_ay * math.sqrt(float(np.sum(np.abs(a_lat) ** 2)))
            + w.K_ax * math.sqrt(float(np.sum(np.abs(a_lon) ** 2))))


def proximity_cost(path: SampledPath, targets, w: CostWeights) -> float:
    """Mean over samples of the distance to the nearest target."""
    if not targets:
        return 0.0
    dmin = np.full(len(path), math.inf)
    for target in targets:
        tt = np.clip(path.t, target.times[0], target.times[-1])
        tx = np.interp(tt, target.times, target.xs)
        ty = np.interp(tt, target.times, target.ys)
        d = np.hypot(tx - path.x, ty - path.y)
        np.minimum(dmin, d, out=dmin)
    return w.K_prox * float(np.mean(dmin))


def rank_paths(path_set: PathSet, targets, space: DriveableSpace,
               fp: Footprint, w: CostWeights,
               dt_check: float = 0.1) -> list[RankedPath]:
    """Reject or cost every path of the set; input order is preserved.

    Paths must be expressed in the same frame as the space and the target
    predictions. The driveable check runs before the collision check, so a
    path failing both reports not_driveable.
    """
    ranked: list[RankedPath] = []
    for path in path_set.paths:
        if not driveable_area_check(path, space, fp):
            ranked.append(RankedPath(path=path, rejected=REJECT_NOT_DRIVEABLE))
            continue
        report = collision_check(path, targets, fp, dt_check)
        if report.collides:
            ranked.append(RankedPath(path=path, rejected=REJECT_COLLISION,
                                     report=report))
            continue
        sev = severity_cost(path, w)
        prox = proximity_cost(path, targets, w)
        ranked.append(RankedPath(path=path, severity=sev, proximity=prox,
                                 total=sev + prox, report=report))
    return ranked


def select_path(ranked: list[RankedPath],
                dt_fine: float = 0.01) -> SampledPath | None:
    """Lowest-cost survivor, resampled to the fine control grid.

    Ties break toward lower severity, then lower path index.
    """
    survivors = [r for r in ranked if r.rejected is None]
    if not survivors:
        return None
    best = min(survivors, key=lambda r: (r.total, r.severity, r.path.index))
    path = best.path
    if path.profile is not None and abs(path.dt - dt_fine) > 1e-12:
        fine = anchor_path(presample_profile(path.profile, dt_fine),
                           path.frame)
        fine.side = path.side
        fine.index = path.index
        fine.path_id = path.path_id
        return fine
    return path


def monitor_selected(path: SampledPath, targets, space: DriveableSpace,
                     fp: Footprint, dt_check: float = 0.1) -> PathValidity:
    """Re-check the remaining part of the active path against fresh data."""
    if not driveable_area_check(path, space, fp):
        return PathValidity(valid=False, reason=REJECT_NOT_DRIVEABLE)
    report = collision_check(path, targets, fp, dt_check)
    if report.collides:
        return PathValidity(valid=False, reason=REJECT_COLLISION, report=report)
    return PathValidity(valid=True, report=report)
