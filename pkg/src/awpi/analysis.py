"""Closed-form chattering/deadlock predictors and event-log detectors.

The chattering predictors bound the input below which the integrator,
once unlocked under a steadily decreasing input, never relocks within a
step horizon ``k``.  The printed condition they implement sums the
per-step proportional pull-down against the integrator push-up; its
state-contribution summand admits two readings, selectable via
``summand``:

* ``"cumulative"`` (default): the i-th step contributes ``i * du`` of
  accumulated state growth.  This reading matches direct step-by-step
  simulation of both explicit methods (verified in the test suite) and
  is the one used everywhere in this package.
* ``"literal"``: every step contributes ``k * du``.  Kept selectable
  because the condition is often written this way; it does not match
  simulation and makes both methods collapse to the same bound.

The deadlock bounds cover the implicit method: the minimum step size
that avoids status toggling across inner iterations, and the maximum
step size at which the increment test ends the toggling under a given
tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .model import PiParams
from .signals import sample
from .stepping import EventLog, StepRecord

SUMMAND_READINGS = ("cumulative", "literal")


@dataclass(frozen=True)
class ChatterPrediction:
    """Per-horizon no-relock bounds and their binding minimum."""

    method: str
    k_max: int
    threshold_u: float
    per_k_thresholds: tuple[tuple[int, float], ...]
    u_ref: Optional[float] = None


@dataclass(frozen=True)
class DeadlockBounds:
    """Step-size bounds around a deadlock episode."""

    h_min_avoid: float
    h_max_exit: float


@dataclass(frozen=True)
class ChatterInterval:
    """Maximal stretch of accepted steps with dense limiter switching."""

    t_start: float
    t_end: float
    n_toggles: int


@dataclass(frozen=True)
class DeadlockEpisode:
    """Consecutive non-convergent attempts at one simulation time."""

    t: float
    u_onset: float
    attempts: int
    exit_h: Optional[float]
    exit_kind: str  # "tolerance", "status-stable" or "unresolved"


def chatter_bounds(
    kp: float, ki: float, h: float, du_per_step: float, k_max: int,
    method: str, summand: str = "cumulative",
) -> list[tuple[int, float]]:
    """Horizon-k no-relock bounds on the unlock input, gains given directly.

    Built by accumulating the condition's sums term by term rather than
    from a hand-simplified closed form.  ``ki == 0`` yields infinite
    bounds: a pure proportional controller never relocks under a
    decreasing input.
    """
    if du_per_step >= 0:
        raise ValueError(f"du_per_step must be < 0 (decreasing input), got {du_per_step}")
    if k_max < 1:
        raise ValueError(f"k_max must be >= 1, got {k_max}")
    if summand not in SUMMAND_READINGS:
        raise ValueError(f"summand must be one of {SUMMAND_READINGS}, got {summand!r}")
    if ki == 0:
        return [(k, math.inf) for k in range(1, k_max + 1)]
    # ELM carries the state one step ahead: its summand index runs 1..k
    # where the partitioned method's runs 0..k-1.
    offset = 1 if method == "elm" else 0
    bounds = []
    for k in range(1, k_max + 1):
        s_prop = 0.0
        for i in range(0, k + 1):
            s_prop += du_per_step
        s_state = 0.0
        for i in range(offset, k + offset):
            s_state += (k if summand == "literal" else i) * du_per_step
        # kp*s_prop + h*ki*(k*u + s_state) < 0  solved as equality for u
        bounds.append((k, (-kp * s_prop - h * ki * s_state) / (h * ki * k)))
    return bounds


def _chatter_prediction(params, h, du_per_step, u_ref, k_max, method, summand):
    per_k = chatter_bounds(params.kp, params.ki, h, du_per_step, k_max, method, summand)
    return ChatterPrediction(
        method=method, k_max=k_max,
        threshold_u=min(b for _, b in per_k),
        per_k_thresholds=tuple(per_k), u_ref=u_ref,
    )


def chattering_threshold_epm(
    params: PiParams, h: float, du_per_step: float,
    u_ref: Optional[float] = None, k_max: int = 10, summand: str = "cumulative",
) -> ChatterPrediction:
    """No-relock input threshold for the explicit-partitioned method."""
    return _chatter_prediction(params, h, du_per_step, u_ref, k_max, "epm", summand)


def chattering_threshold_elm(
    params: PiParams, h: float, du_per_step: float,
    u_ref: Optional[float] = None, k_max: int = 10, summand: str = "cumulative",
) -> ChatterPrediction:
    """No-relock input threshold for the execution-list method."""
    return _chatter_prediction(params, h, du_per_step, u_ref, k_max, "elm", summand)


def min_step_avoid_deadlock_discrete(params: PiParams, u_t: float, du_t: float) -> float:
    """Step-size bound below which an unlocking step cannot toggle back.

    Discrete-increment form for a locked-at-upper state with positive,
    decreasing input: the proportional pull-down ``kp*du`` must outweigh
    the trapezoidal state increment ``0.5*h*ki*u``.
    """
    if u_t <= 0:
        raise ValueError(f"u_t must be > 0 (upper-limit lock scenario), got {u_t}")
    if du_t > 0:
        raise ValueError(f"du_t must be <= 0 (decreasing input), got {du_t}")
    return -(2.0 * params.kp / params.ki) * (du_t / u_t)


def min_step_avoid_deadlock_differentiable(
    params: PiParams, u_prev: float, udot_t: float, udot_prev: float
) -> float:
    """Minimum step size keeping the integrator unlocked, rate form.

    Valid when the input is differentiable and decreasing around the
    previous step (``udot_t + udot_prev < 0``).  The bound can exceed
    any practical step size, in which case deadlock is unavoidable by
    step control alone.
    """
    s = udot_t + udot_prev
    if s >= 0:
        raise ValueError(f"udot_t + udot_prev must be < 0 (decreasing input), got {s}")
    return -2.0 * params.kp / params.ki - 2.0 * u_prev / s


def max_step_exit_deadlock(params: PiParams, u_t: float, epsilon: float) -> float:
    """Largest step size at which the increment test ends the toggling.

    During a deadlock the per-iteration state increment is exactly
    ``0.5*h*ki*|u|``; the loop can only exit once that falls below the
    tolerance, i.e. for ``h < 2*epsilon / (ki*|u|)``.  Returns ``inf``
    for ``u_t == 0`` (any step size exits).
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    if u_t == 0:
        return math.inf
    return 2.0 * epsilon / (params.ki * abs(u_t))


def deadlock_bounds(
    params: PiParams, u_onset: float, udot_t: float, udot_prev: float, epsilon: float
) -> DeadlockBounds:
    """Bundle both step-size bounds evaluated at a deadlock onset."""
    return DeadlockBounds(
        h_min_avoid=min_step_avoid_deadlock_differentiable(params, u_onset, udot_t, udot_prev),
        h_max_exit=max_step_exit_deadlock(params, u_onset, epsilon),
    )


def limiter_transitions(log: EventLog) -> list[tuple[float, float, str, str]]:
    """All status changes over accepted steps: (t, u, from, to)."""
    out = []
    for rec in log.accepted:
        if rec.limiter_after != rec.limiter_before:
            out.append(
                (rec.state_after.t, rec.state_after.u,
                 rec.limiter_before.name, rec.limiter_after.name)
            )
    return out


def relock_events(log: EventLog, limit: str = "upper") -> list[tuple[float, float]]:
    """Interior-to-limit transitions (t, u), i.e. the relocking events."""
    if limit not in ("upper", "lower"):
        raise ValueError(f"limit must be 'upper' or 'lower', got {limit!r}")
    out = []
    for rec in log.accepted:
        if rec.limiter_before.z_i and rec.limiter_after.code != 0:
            if (limit == "upper") == rec.limiter_after.z_u:
                out.append((rec.state_after.t, rec.state_after.u))
    return out


def detect_chattering(
    log: EventLog, window: int = 10, min_toggles: int = 2
) -> list[ChatterInterval]:
    """Maximal intervals with >= ``min_toggles`` status changes in any
    sliding window of ``window`` accepted steps."""
    recs = log.accepted
    n = len(recs)
    if n == 0:
        return []
    toggles = [r.limiter_after != r.limiter_before for r in recs]
    marked = [False] * n
    prefix = [0]
    for tg in toggles:
        prefix.append(prefix[-1] + int(tg))
    for start in range(n):
        end = min(start + window, n)
        if prefix[end] - prefix[start] >= min_toggles:
            for i in range(start, end):
                marked[i] = True
    intervals = []
    i = 0
    while i < n:
        if not marked[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and marked[j + 1]:
            j += 1
        intervals.append(
            ChatterInterval(
                t_start=recs[i].t,
                t_end=recs[j].state_after.t,
                n_toggles=prefix[j + 1] - prefix[i],
            )
        )
        i = j + 1
    return intervals


def detect_deadlock(log: EventLog) -> list[DeadlockEpisode]:
    """Group consecutive non-convergent attempts at one time into episodes.

    Each episode reports the input at its start time, the number of
    failed attempts, and how it ended: by the tolerance exit, by a
    status-stable solve at a smaller step, or not at all (run aborted
    or horizon reached mid-episode).
    """
    episodes = []
    recs = log.records
    i = 0
    n = len(recs)
    while i < n:
        if recs[i].converged:
            i += 1
            continue
        t0 = recs[i].t
        attempts = 0
        j = i
        while j < n and not recs[j].converged and abs(recs[j].t - t0) <= 1e-15:
            attempts += 1
            j += 1
        exit_h = None
        exit_kind = "unresolved"
        if j < n and recs[j].converged and abs(recs[j].t - t0) <= 1e-15:
            exit_h = recs[j].h_used
            exit_kind = "tolerance" if recs[j].tolerance_exit else "status-stable"
        episodes.append(
            DeadlockEpisode(
                t=t0, u_onset=sample(log.signal, t0),
                attempts=attempts, exit_h=exit_h, exit_kind=exit_kind,
            )
        )
        i = j
    return episodes


def first_unlock(log: EventLog) -> Optional[StepRecord]:
    """First record where a locked integrator attempts to unlock.

    For the explicit methods this is the first accepted limit-to-interior
    transition; for the implicit method a non-convergent or
    tolerance-exit attempt from a locked status also qualifies (the
    unlock attempt that starts a deadlock).
    """
    for rec in log.records:
        if rec.limiter_before.code == 0:
            continue
        if rec.limiter_after.z_i or not rec.converged or rec.tolerance_exit:
            return rec
    return None
