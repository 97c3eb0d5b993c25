"""Stepping workflows: explicit-partitioned, execution-list, implicit-trapezoidal.

The three public methods are

``"epm"``
    Algebraic solve first with the old state, then an explicit forward
    Euler update of the integrator gated by the fresh limiter status.
    The state change reaches ``y`` one step late.
``"elm"``
    Blocks evaluated in data-flow order: the integrator update is gated
    by the *previous* step's status and is visible in ``y`` immediately.
``"itm"``
    Implicit trapezoidal with an inner iteration loop that re-solves the
    active equation branch and refreshes the anti-windup status after
    every solve.  Non-convergent steps are retried at the same time with
    the step size shrunk by the adjustment heuristic.

EPM and ELM march at fixed step size; ITM adjusts the step after every
attempt (grow by ``h_delta`` when a step converged in <= 3 iterations,
shrink by ``h_delta`` when it took >= 15 or failed, clamped to
``[h_min_floor, h_cap]``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .model import INTERIOR, LimiterState, PiParams, SimState, eval_algebraic, rate, update_aw_status
from .signals import SignalSpec, as_breakpoints, sample

METHODS = ("epm", "elm", "itm")

# sub-nanosecond slack for end-of-horizon comparisons
_T_EPS = 1e-12


class SimulationError(RuntimeError):
    """Raised when a run cannot make progress (stuck at the step floor)."""


@dataclass(frozen=True)
class ItmSettings:
    """Inner-iteration and step-size policy for the implicit method.

    ``epsilon`` is the convergence tolerance on the maximum variable
    increment between successive iterates; ``h_delta`` is the adjustment
    quantum of the step-size heuristic.  ``max_floor_failures`` bounds
    consecutive non-convergent attempts at ``h_min_floor`` before the
    run aborts.
    """

    epsilon: float = 1e-3
    n_iter_max: int = 20
    h_init: float = 1e-3
    h_min_floor: float = 1e-6
    h_cap: float = 1e-3
    h_delta: float = 1e-6
    max_floor_failures: int = 100

    def __post_init__(self):
        if not 0 < self.h_min_floor <= self.h_init <= self.h_cap:
            raise ValueError(
                f"ItmSettings requires 0 < h_min_floor <= h_init <= h_cap, got "
                f"h_min_floor={self.h_min_floor}, h_init={self.h_init}, h_cap={self.h_cap}"
            )
        if not self.epsilon > 0:
            raise ValueError(f"ItmSettings requires epsilon > 0, got {self.epsilon}")
        if self.n_iter_max < 2:
            raise ValueError(f"ItmSettings requires n_iter_max >= 2, got {self.n_iter_max}")
        if not self.h_delta > 0:
            raise ValueError(f"ItmSettings requires h_delta > 0, got {self.h_delta}")


@dataclass(frozen=True)
class StepRecord:
    """Outcome of one step attempt.

    ``t`` is the step start time; ``state_after`` holds the values at
    ``t + h_used``.  EPM/ELM records always have ``n_iterations == 1``
    and ``converged == True``.  For ITM, ``tolerance_exit`` marks steps
    accepted on the increment test alone while the limiter status was
    still toggling, and ``iteration_trace`` holds one
    ``(x, y, w, limiter)`` tuple per inner solve.
    """

    t: float
    h_used: float
    state_after: SimState
    limiter_before: LimiterState
    limiter_after: LimiterState
    n_iterations: int = 1
    converged: bool = True
    tolerance_exit: bool = False
    iteration_trace: Optional[tuple] = None


@dataclass(frozen=True)
class EventLog:
    """Ordered step records of one run, failed ITM attempts included."""

    method: str
    params: PiParams
    signal: SignalSpec
    t_start: float
    t_end: float
    records: tuple[StepRecord, ...] = field(default_factory=tuple)

    @property
    def accepted(self) -> tuple[StepRecord, ...]:
        return tuple(r for r in self.records if r.converged)

    @property
    def failed(self) -> tuple[StepRecord, ...]:
        return tuple(r for r in self.records if not r.converged)

    def final_state(self) -> SimState:
        acc = self.accepted
        if not acc:
            raise ValueError("log holds no accepted step")
        return acc[-1].state_after


def initialize(params: PiParams, signal: SignalSpec, initial_output: float) -> SimState:
    """Initial state with the prescribed pre-limit output at t = 0.

    Sets ``x`` so that ``y = kp*u(0) + x`` equals ``initial_output``;
    the limiter status and ``w`` follow from the limit classification
    (an initial output at or beyond a limit starts the run locked).
    """
    if not math.isfinite(initial_output):
        raise ValueError(f"initial output must be finite, got {initial_output}")
    u0 = sample(signal, 0.0)
    x0 = initial_output - params.kp * u0
    limiter = update_aw_status(params, initial_output)
    y0, w0 = eval_algebraic(params, x0, u0, limiter)
    return SimState(t=0.0, x=x0, y=y0, w=w0, u=u0, limiter=limiter)


def adapt_step(h: float, n_last: int, settings: ItmSettings) -> float:
    """Step-size heuristic: grow on easy steps, shrink on hard ones."""
    if n_last <= 3:
        h = h + settings.h_delta
    elif n_last >= 15:
        h = h - settings.h_delta
    return min(settings.h_cap, max(settings.h_min_floor, h))


def _state_from(params, t, x, u, z_code) -> SimState:
    limiter = LimiterState.from_code(int(z_code))
    y, w = eval_algebraic(params, x, u, limiter)
    return SimState(t=t, x=x, y=y, w=w, u=u, limiter=limiter)


def step_epm(params: PiParams, prev: SimState, u_next: float, h: float) -> StepRecord:
    """One explicit-partitioned step from ``prev`` to ``prev.t + h``."""
    x_new, y, w, z_after = kernels.epm_single(
        params.kp, params.ki, params.w_min, params.w_max, prev.x, u_next, h
    )
    limiter_after = LimiterState.from_code(int(z_after))
    state = SimState(
        t=prev.t + h, x=float(x_new), y=float(y), w=float(w),
        u=float(u_next), limiter=limiter_after,
    )
    return StepRecord(
        t=prev.t, h_used=h, state_after=state,
        limiter_before=prev.limiter, limiter_after=limiter_after,
    )


def step_elm(params: PiParams, prev: SimState, u_next: float, h: float) -> StepRecord:
    """One execution-list step from ``prev`` to ``prev.t + h``."""
    x_new, y, w, z_after = kernels.elm_single(
        params.kp, params.ki, params.w_min, params.w_max,
        prev.x, prev.limiter.code, u_next, h,
    )
    limiter_after = LimiterState.from_code(int(z_after))
    state = SimState(
        t=prev.t + h, x=float(x_new), y=float(y), w=float(w),
        u=float(u_next), limiter=limiter_after,
    )
    return StepRecord(
        t=prev.t, h_used=h, state_after=state,
        limiter_before=prev.limiter, limiter_after=limiter_after,
    )


def step_itm(
    params: PiParams,
    prev: SimState,
    u_next: float,
    h: float,
    settings: ItmSettings,
    rate_prev: Optional[float] = None,
) -> StepRecord:
    """One implicit-trapezoidal step attempt from ``prev``.

    ``rate_prev`` is the stored state derivative of the previous
    accepted step (0 when the integrator was locked); by default it is
    reconstructed from ``prev``.  A non-convergent attempt returns
    ``converged=False`` with the full iteration trace; the caller
    decides whether to retry at a smaller ``h``.
    """
    if rate_prev is None:
        rate_prev = rate(params, prev.u, prev.limiter)
    nmax = settings.n_iter_max
    tr_x = np.empty(nmax)
    tr_y = np.empty(nmax)
    tr_w = np.empty(nmax)
    tr_z = np.empty(nmax, dtype=np.int64)
    x_it, y_it, w_it, z_post, n_iter, code = kernels.itm_single(
        params.kp, params.ki, params.w_min, params.w_max,
        prev.x, rate_prev, prev.limiter.code, u_next, h,
        settings.epsilon, nmax, tr_x, tr_y, tr_w, tr_z,
    )
    trace = tuple(
        (float(tr_x[i]), float(tr_y[i]), float(tr_w[i]), LimiterState.from_code(int(tr_z[i])))
        for i in range(n_iter)
    )
    limiter_after = LimiterState.from_code(int(z_post))
    # accepted values are made consistent with the final status
    state = _state_from(params, prev.t + h, float(x_it), float(u_next), z_post)
    return StepRecord(
        t=prev.t, h_used=h, state_after=state,
        limiter_before=prev.limiter, limiter_after=limiter_after,
        n_iterations=int(n_iter),
        converged=code != kernels.ITM_FAILED,
        tolerance_exit=code == kernels.ITM_TOLERANCE,
        iteration_trace=trace,
    )


def _simulate_fixed(params, signal, method, initial, h, t_end):
    if h <= 0:
        raise ValueError(f"step size must be > 0, got {h}")
    n = int(math.floor((t_end - initial.t) / h + _T_EPS))
    bx, by = as_breakpoints(signal)
    out_u = np.empty(n)
    out_x = np.empty(n)
    out_y = np.empty(n)
    out_w = np.empty(n)
    out_zb = np.empty(n, dtype=np.int64)
    out_za = np.empty(n, dtype=np.int64)
    march = kernels.epm_march if method == "epm" else kernels.elm_march
    march(
        bx, by, params.kp, params.ki, params.w_min, params.w_max,
        initial.x, initial.limiter.code, initial.t, h, n,
        out_u, out_x, out_y, out_w, out_zb, out_za,
    )
    records = []
    t0 = initial.t
    for k in range(n):
        limiter_after = LimiterState.from_code(int(out_za[k]))
        state = SimState(
            t=t0 + (k + 1) * h, x=float(out_x[k]), y=float(out_y[k]),
            w=float(out_w[k]), u=float(out_u[k]), limiter=limiter_after,
        )
        records.append(
            StepRecord(
                t=t0 + k * h, h_used=h, state_after=state,
                limiter_before=LimiterState.from_code(int(out_zb[k])),
                limiter_after=limiter_after,
            )
        )
    return records


def _simulate_itm(params, signal, initial, settings, t_end):
    records = []
    state = initial
    f_prev = rate(params, state.u, state.limiter)
    h = settings.h_init
    floor_failures = 0
    while t_end - state.t > _T_EPS:
        h_att = min(h, t_end - state.t)
        if h_att < settings.h_min_floor:
            break
        u_next = sample(signal, state.t + h_att)
        rec = step_itm(params, state, u_next, h_att, settings, rate_prev=f_prev)
        records.append(rec)
        h = adapt_step(h, rec.n_iterations if rec.converged else settings.n_iter_max, settings)
        if not rec.converged:
            if h_att <= settings.h_min_floor:
                floor_failures += 1
                if floor_failures > settings.max_floor_failures:
                    raise SimulationError(
                        f"implicit step failed {floor_failures} consecutive times at the "
                        f"step floor h={settings.h_min_floor:g} (t={state.t:.9g}, "
                        f"u={u_next:.9g}); equations do not stabilize within "
                        f"n_iter_max={settings.n_iter_max}"
                    )
            continue
        floor_failures = 0
        state = rec.state_after
        f_prev = rate(params, state.u, state.limiter)
    return records


def simulate(params: PiParams, signal: SignalSpec, method: str, scenario) -> EventLog:
    """Run a scenario and return the complete step log.

    ``scenario`` supplies ``t_end``, ``initial_output`` and the stepping
    policy (``h`` for EPM/ELM, ``itm`` settings for ITM).  Every limiter
    transition and every non-convergent ITM attempt appears in the log.
    """
    method = method.lower()
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}, expected one of {METHODS}")
    initial = initialize(params, signal, scenario.initial_output)
    if scenario.t_end <= initial.t:
        raise ValueError(f"t_end must be > 0, got {scenario.t_end}")
    if method == "itm":
        if scenario.itm is None:
            raise ValueError("ITM scenario requires ItmSettings")
        records = _simulate_itm(params, signal, initial, scenario.itm, scenario.t_end)
    else:
        if scenario.h is None:
            raise ValueError(f"{method} scenario requires a fixed step size h")
        records = _simulate_fixed(params, signal, method, initial, scenario.h, scenario.t_end)
    return EventLog(
        method=method, params=params, signal=signal,
        t_start=initial.t, t_end=scenario.t_end, records=tuple(records),
    )
