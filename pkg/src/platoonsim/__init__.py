"""Platoon scheduling for a signal-free intersection.

Subpackages by role:

- core: vehicles, parameters, the crossing schedule, platoon book, config.
- pfa: the three scheduling disciplines (exhaustive, gated, batch) as
  object-level reference implementations, plus invariant checks.
- spa: closed-form speed profiles realizing a schedule (minimum distance
  shortfall or minimum acceleration effort), an independent discretized
  oracle, feasibility checks, CSV export.
- polling: light/heavy-traffic mean-delay limits and the interpolation
  between them, per lane and discipline.
- sim: discrete-event runs (compiled kernel + reference path), arrival
  streams, batch-means statistics, load sweeps.
- cli: the `platoonsim` command (run / sweep / approx / traj).
"""
from .core import (
    ConfigError,
    DepartureOutOfOrder,
    GateBook,
    InconsistentGateBook,
    NoInsertionPoint,
    NonPositiveParameter,
    PlatoonEntry,
    PlatoonError,
    RunConfig,
    SClearanceBelowB,
    Schedule,
    SimParams,
    UnstableLoad,
    Vehicle,
    load_config,
    parse_config,
    validate_params,
)
from .pfa import (
    assert_regular,
    depart,
    gap_violations,
    schedule_batch,
    schedule_exhaustive,
    schedule_gated,
)
from .polling import (
    ApproxCoefficients,
    PollingInput,
    UnsupportedDiscipline,
    approx_coefficients,
    approx_mean_delay,
    ht_omega,
    light_traffic_delay,
    mean_queue_length,
)
from .sim import LaneStats, RunResult, make_arrivals, run, run_reference, sweep
from .spa import (
    InfeasibleCrossingTime,
    NegativeDiscriminant,
    OvercrowdingViolation,
    PlannedSchedule,
    SeparationViolation,
    SingleDipViolation,
    Trajectory,
    TrajectoryError,
    accel_cost,
    area,
    check_overcrowding,
    evaluate,
    oracle_min,
    plan_min_accel,
    plan_min_distance,
    plan_schedule,
    verify_separation,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # core
    "ConfigError",
    "DepartureOutOfOrder",
    "GateBook",
    "InconsistentGateBook",
    "NoInsertionPoint",
    "NonPositiveParameter",
    "PlatoonEntry",
    "PlatoonError",
    "RunConfig",
    "SClearanceBelowB",
    "Schedule",
    "SimParams",
    "UnstableLoad",
    "Vehicle",
    "load_config",
    "parse_config",
    "validate_params",
    # pfa
    "assert_regular",
    "depart",
    "gap_violations",
    "schedule_batch",
    "schedule_exhaustive",
    "schedule_gated",
    # polling
    "ApproxCoefficients",
    "PollingInput",
    "UnsupportedDiscipline",
    "approx_coefficients",
    "approx_mean_delay",
    "ht_omega",
    "light_traffic_delay",
    "mean_queue_length",
    # sim
    "LaneStats",
    "RunResult",
    "make_arrivals",
    "run",
    "run_reference",
    "sweep",
    # spa
    "InfeasibleCrossingTime",
    "NegativeDiscriminant",
    "OvercrowdingViolation",
    "PlannedSchedule",
    "SeparationViolation",
    "SingleDipViolation",
    "Trajectory",
    "TrajectoryError",
    "accel_cost",
    "area",
    "check_overcrowding",
    "evaluate",
    "oracle_min",
    "plan_min_accel",
    "plan_min_distance",
    "plan_schedule",
    "verify_separation",
]
