"""Anti-windup PI controller simulation and chattering/deadlock analysis.

Simulates the standard proportional-integral block whose integrator is
conditionally frozen by the output hard limiter, under three stepping
workflows (explicit-partitioned, execution-list, implicit-trapezoidal),
and provides closed-form predictors for when limiter chattering stops
and when the implicit method's inner iteration deadlocks.
"""

from ._backend import NUMBA_ENABLED
from .analysis import (
    ChatterInterval,
    ChatterPrediction,
    DeadlockBounds,
    DeadlockEpisode,
    chattering_threshold_elm,
    chattering_threshold_epm,
    deadlock_bounds,
    detect_chattering,
    detect_deadlock,
    limiter_transitions,
    max_step_exit_deadlock,
    min_step_avoid_deadlock_differentiable,
    min_step_avoid_deadlock_discrete,
    relock_events,
)
from .model import (
    LimiterState,
    PiParams,
    SimState,
    eval_algebraic,
    rate,
    update_aw_status,
)
from .scenario import (
    ScenarioConfig,
    ScenarioError,
    build_report,
    bundled_scenario_names,
    load_scenario,
    save_scenario,
    write_events,
    write_timeseries,
)
from .signals import SignalSpec, derivative, sample
from .stepping import (
    EventLog,
    ItmSettings,
    SimulationError,
    StepRecord,
    adapt_step,
    initialize,
    simulate,
    step_elm,
    step_epm,
    step_itm,
)

__version__ = "0.1.0"

__all__ = [
    "NUMBA_ENABLED",
    "ChatterInterval",
    "ChatterPrediction",
    "DeadlockBounds",
    "DeadlockEpisode",
    "EventLog",
    "ItmSettings",
    "LimiterState",
    "PiParams",
    "ScenarioConfig",
    "ScenarioError",
    "SignalSpec",
    "SimState",
    "SimulationError",
    "StepRecord",
    "adapt_step",
    "build_report",
    "bundled_scenario_names",
    "chattering_threshold_elm",
    "chattering_threshold_epm",
    "deadlock_bounds",
    "derivative",
    "detect_chattering",
    "detect_deadlock",
    "eval_algebraic",
    "initialize",
    "limiter_transitions",
    "load_scenario",
    "max_step_exit_deadlock",
    "min_step_avoid_deadlock_differentiable",
    "min_step_avoid_deadlock_discrete",
    "rate",
    "relock_events",
    "sample",
    "save_scenario",
    "simulate",
    "step_elm",
    "step_epm",
    "step_itm",
    "update_aw_status",
    "write_events",
    "write_timeseries",
]
