"""aessim: closed-loop simulation stack for autonomous evasive steering.

Submodules follow the pipeline order: capability -> pathgen -> geometry ->
ranking -> decision -> control -> plant, orchestrated by simloop and driven
by the scenario CLI.
"""

__version__ = "0.1.0"

from .capability import (CapabilityRecord, CapabilityScenario,
                         CapabilityTuning, EgoState, VehicleParams)
from .geometry import DriveableSpace, Footprint, Pose, TargetTrack
from .pathgen import CurvatureProfile, PathSet, PathTuning, SampledPath
from .scenario import ScenarioConfig, load_scenario
from .simloop import RunResult, run_scenario

__all__ = [
    "CapabilityRecord", "CapabilityScenario", "CapabilityTuning",
    "CurvatureProfile", "DriveableSpace", "EgoState", "Footprint",
    "PathSet", "PathTuning", "Pose", "RunResult", "SampledPath",
    "ScenarioConfig", "TargetTrack", "VehicleParams", "load_scenario",
    "run_scenario",
]
