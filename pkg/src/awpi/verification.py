"""End-to-end checks of the bundled benchmark scenarios.

Each check reproduces one headline number of the saturating-ramp
benchmark and compares it at a fixed tolerance:

* explicit-partitioned chattering stops once the input drops below
  0.0595 (predictor and simulated last relocking),
* execution-list chattering stops at 0.0605,
* the implicit method deadlocks first at t = 3.709 s with input 0.2915,
* the step-size bounds around that deadlock: 0.1915 s to avoid it,
  3.431e-4 s to exit it, and the simulated episode exiting at the first
  attempt below that bound.

``awpi verify`` prints one line per check and exits non-zero on any
mismatch.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import analysis
from .scenario import load_scenario
from .stepping import simulate

# expected values and tolerances for the bundled benchmark
EPM_THRESHOLD = 0.0595
ELM_THRESHOLD = 0.0605
THRESHOLD_TOL_PREDICTOR = 5e-4
THRESHOLD_TOL_SIMULATED = 1e-3
ONSET_T = 3.709
ONSET_U = 0.2915
ONSET_TOL = 0.01
H_MIN_AVOID = 0.1915
H_MIN_AVOID_TOL = 1e-12
H_MAX_EXIT = 3.431e-4
H_MAX_EXIT_TOL = 1e-7


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _check(name, passed, detail) -> CheckResult:
    return CheckResult(name=name, passed=bool(passed), detail=detail)


def _chatter_check(method: str, expected: float) -> CheckResult:
    cfg = load_scenario(f"paper_sec5_{method}")
    log = simulate(cfg.params, cfg.signal, cfg.method, cfg)
    du = -cfg.h  # falling ramp at unit slope
    predictor = (
        analysis.chattering_threshold_epm if method == "epm"
        else analysis.chattering_threshold_elm
    )
    threshold = predictor(cfg.params, cfg.h, du, k_max=10).threshold_u
    relocks = analysis.relock_events(log, "upper")
    last_u = relocks[-1][1] if relocks else float("nan")
    ok = (
        abs(threshold - expected) <= THRESHOLD_TOL_PREDICTOR
        and relocks
        and abs(last_u - expected) <= THRESHOLD_TOL_SIMULATED
    )
    return _check(
        f"{method.upper()} chattering stop at u={expected}",
        ok,
        f"predictor={threshold:.6g}, simulated last relock u={last_u:.6g}",
    )


def _itm_results():
    cfg = load_scenario("paper_sec5_itm")
    log = simulate(cfg.params, cfg.signal, cfg.method, cfg)
    episodes = analysis.detect_deadlock(log)
    return cfg, log, episodes


def run_verification() -> list[CheckResult]:
    """Run the bundled scenarios and check the four benchmark numbers."""
    results = [
        _chatter_check("epm", EPM_THRESHOLD),
        _chatter_check("elm", ELM_THRESHOLD),
    ]

    cfg, log, episodes = _itm_results()
    if not episodes:
        results.append(_check(
            f"ITM deadlock onset at t={ONSET_T}s, u={ONSET_U}", False,
            "no deadlock episode found"))
        results.append(_check("deadlock step-size bounds", False, "no episode"))
        return results

    ep = episodes[0]
    ok_onset = abs(ep.t - ONSET_T) <= ONSET_TOL and abs(ep.u_onset - ONSET_U) <= ONSET_TOL
    results.append(_check(
        f"ITM deadlock onset at t={ONSET_T}s, u={ONSET_U}",
        ok_onset,
        f"first non-convergent step at t={ep.t:.6g}, u={ep.u_onset:.6g} "
        f"({ep.attempts} failed attempts)",
    ))

    h_min = analysis.min_step_avoid_deadlock_differentiable(cfg.params, ONSET_U, -1.0, -1.0)
    h_max = analysis.max_step_exit_deadlock(cfg.params, ONSET_U, cfg.itm.epsilon)
    exit_ok = (
        ep.exit_h is not None
        and ep.exit_kind == "tolerance"
        and ep.exit_h < H_MAX_EXIT
        and ep.exit_h + cfg.itm.h_delta >= H_MAX_EXIT
    )
    ok_bounds = (
        abs(h_min - H_MIN_AVOID) <= H_MIN_AVOID_TOL
        and abs(h_max - H_MAX_EXIT) <= H_MAX_EXIT_TOL
        and exit_ok
    )
    exit_h_txt = "none" if ep.exit_h is None else f"{ep.exit_h:.6g}"
    results.append(_check(
        f"deadlock bounds h_min={H_MIN_AVOID}s, h_max={H_MAX_EXIT:.4g}s",
        ok_bounds,
        f"h_min_avoid={h_min:.6g}, h_max_exit={h_max:.6g}, "
        f"episode exit_h={exit_h_txt} ({ep.exit_kind})",
    ))
    return results
