"""Python bindings for the planar-robot VIO model: simulation, observability analysis, estimation."""

from ._core import (
    analyze_observability,
    effective_control,
    estimate,
    profiles,
    run,
    scenario_json,
    so3_exp,
    so3_log,
)

__all__ = [
    "analyze_observability",
    "effective_control",
    "estimate",
    "profiles",
    "run",
    "scenario_json",
    "so3_exp",
    "so3_log",
]
