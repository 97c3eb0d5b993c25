"""Command-line interface.

Subcommands::

    awpi run <scenario> [--out DIR] [--format {csv,json-lines}]
    awpi predict <scenario> [--k-max N]
    awpi verify

``<scenario>`` is a TOML file path or the name of a bundled scenario
(see ``awpi.scenario.bundled_scenario_names``).  Exit codes: 0 success,
1 verification/runtime failure, 2 usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import analysis
from .scenario import (
    ScenarioError,
    build_report,
    bundled_scenario_names,
    load_scenario,
    write_events,
    write_timeseries,
)
from .signals import derivative, sample
from .stepping import SimulationError, simulate
from .verification import run_verification


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="awpi",
        description="Anti-windup PI controller simulation and analysis",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate a scenario and write results")
    p_run.add_argument("scenario", help="scenario TOML path or bundled name")
    p_run.add_argument("--out", default="awpi_out", help="output directory (default: awpi_out)")
    p_run.add_argument(
        "--format", choices=("csv", "json-lines"), default="csv",
        help="encoding of the time series and event tables (default: csv)",
    )

    p_pred = sub.add_parser("predict", help="print chattering/deadlock predictions")
    p_pred.add_argument("scenario", help="scenario TOML path or bundled name")
    p_pred.add_argument("--k-max", type=int, default=10,
                        help="step horizon for the chattering bounds (default: 10)")

    sub.add_parser("verify", help="check the bundled benchmark numbers")
    return parser


def _cmd_run(args) -> int:
    cfg = load_scenario(args.scenario)
    log = simulate(cfg.params, cfg.signal, cfg.method, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ext = "csv" if args.format == "csv" else "jsonl"
    ts_path = out / f"{cfg.name}_timeseries.{ext}"
    ev_path = out / f"{cfg.name}_events.{ext}"
    rp_path = out / f"{cfg.name}_report.json"
    write_timeseries(log, ts_path, fmt=args.format)
    write_events(log, ev_path, fmt=args.format)
    report = build_report(cfg, log)
    rp_path.write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    print(f"{cfg.name}: {len(log.accepted)} accepted steps, "
          f"{len(log.failed)} failed attempts ({cfg.method})")
    for path in (ts_path, ev_path, rp_path):
        print(f"  wrote {path}")
    return 0


def _cmd_predict(args) -> int:
    cfg = load_scenario(args.scenario)
    log = simulate(cfg.params, cfg.signal, cfg.method, cfg)
    unlock = analysis.first_unlock(log)
    print(f"scenario {cfg.name}: kp={cfg.params.kp}, ki={cfg.params.ki}, "
          f"h={cfg.base_step:g}")
    if unlock is None:
        print("integrator never attempts to unlock within the horizon; "
              "no chattering/deadlock predictions apply")
        return 0
    u_ref = sample(cfg.signal, unlock.t)
    slope = derivative(cfg.signal, unlock.t)
    du = slope * cfg.base_step
    print(f"first unlock attempt: t={unlock.t:.6g} s, u={u_ref:.6g}, du/dt={slope:g}")
    if du < 0:
        for name, fn in (("EPM", analysis.chattering_threshold_epm),
                         ("ELM", analysis.chattering_threshold_elm)):
            pred = fn(cfg.params, cfg.base_step, du, u_ref=u_ref, k_max=args.k_max)
            k_bind = min(pred.per_k_thresholds, key=lambda kb: kb[1])[0]
            print(f"chattering threshold ({name}, k_max={pred.k_max}): "
                  f"u < {pred.threshold_u:.6g} (binding horizon k={k_bind})")
    if slope < 0:
        h_min = analysis.min_step_avoid_deadlock_differentiable(cfg.params, u_ref, slope, slope)
        print(f"deadlock bounds at u={u_ref:.6g}:")
        print(f"  h_min_avoid = {h_min:.6g} s (step must exceed this to stay unlocked)")
        if cfg.itm is not None:
            h_max = analysis.max_step_exit_deadlock(cfg.params, u_ref, cfg.itm.epsilon)
            print(f"  h_max_exit  = {h_max:.6g} s "
                  f"(tolerance {cfg.itm.epsilon:g} ends the toggling below this)")
    return 0


def _cmd_verify() -> int:
    results = run_verification()
    failed = 0
    for res in results:
        tag = "PASS" if res.passed else "FAIL"
        print(f"[{tag}] {res.name}: {res.detail}")
        failed += 0 if res.passed else 1
    if failed:
        print(f"{failed} of {len(results)} checks failed")
        return 1
    print(f"all {len(results)} checks passed")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "predict":
            return _cmd_predict(args)
        return _cmd_verify()
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SimulationError as exc:
        print(f"simulation aborted: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
