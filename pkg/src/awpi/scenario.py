"""Scenario files, result tables and analysis reports.

Scenarios are TOML documents with three nested sections::

    name = "paper_sec5_itm"
    method = "itm"                  # epm | elm | itm
    t_end = 4.5
    initial_output = -0.1552        # prescribed pre-limit output at t=0

    [controller]
    kp = 1.0
    ki = 20.0
    w_min = -1.0
    w_max = 1.0

    [signal]
    kind = "triangular-ramp"        # constant | triangular-ramp | piecewise-linear
    u0 = 0.0005
    t_down = 2.0
    t_up = 6.0
    slope = 1.0

    [stepping]                      # EPM/ELM: h only; ITM: the full settings
    epsilon = 1e-3
    h_init = 1e-3
    ...

Parsing is strict: unknown keys are rejected so a typo cannot silently
fall back to a default.  Runs are fully deterministic; two runs of the
same scenario produce byte-identical output files.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from importlib import resources

from . import analysis
from .model import PiParams
from .signals import SignalSpec, derivative, sample
from .stepping import EventLog, ItmSettings, METHODS

SCHEMA_VERSION = 1

TIMESERIES_COLUMNS = (
    "t", "h_used", "u", "x", "y", "w",
    "z_i", "z_u", "z_l", "n_iterations", "converged",
)

EVENT_COLUMNS = (
    "schema_version", "event", "t", "t_end", "u",
    "from", "to", "attempts", "exit_h", "exit_kind", "n_toggles",
)


class ScenarioError(ValueError):
    """Scenario file cannot be parsed or fails validation."""


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete, validated definition of one simulation run."""

    name: str
    method: str
    t_end: float
    initial_output: float
    params: PiParams
    signal: SignalSpec
    h: Optional[float] = None
    itm: Optional[ItmSettings] = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.method == "itm" and self.itm is None:
            raise ValueError("method 'itm' requires a [stepping] section with ItmSettings")
        if self.method != "itm" and self.h is None:
            raise ValueError(f"method {self.method!r} requires a fixed step size h")

    @property
    def base_step(self) -> float:
        return self.itm.h_init if self.method == "itm" else self.h


def _require(table: dict, key: str, ctx: str):
    if key not in table:
        raise ScenarioError(f"{ctx}: missing required key {key!r}")
    return table[key]


def _reject_unknown(table: dict, allowed: set, ctx: str):
    unknown = sorted(set(table) - allowed)
    if unknown:
        raise ScenarioError(f"{ctx}: unknown key(s) {unknown}; allowed: {sorted(allowed)}")


def _as_float(value, key: str, ctx: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{ctx}: key {key!r} must be a number, got {value!r}")
    return float(value)


def _parse_signal(table: dict, ctx: str) -> SignalSpec:
    kind = _require(table, "kind", ctx)
    if kind == "constant":
        _reject_unknown(table, {"kind", "value"}, ctx)
        return SignalSpec(kind="constant", value=_as_float(_require(table, "value", ctx), "value", ctx))
    if kind == "triangular-ramp":
        _reject_unknown(table, {"kind", "u0", "t_down", "t_up", "slope"}, ctx)
        return SignalSpec(
            kind="triangular-ramp",
            u0=_as_float(_require(table, "u0", ctx), "u0", ctx),
            t_down=_as_float(_require(table, "t_down", ctx), "t_down", ctx),
            t_up=_as_float(_require(table, "t_up", ctx), "t_up", ctx),
            slope=_as_float(_require(table, "slope", ctx), "slope", ctx),
        )
    if kind == "piecewise-linear":
        _reject_unknown(table, {"kind", "breakpoints"}, ctx)
        bps = _require(table, "breakpoints", ctx)
        try:
            pairs = tuple((float(t), float(u)) for t, u in bps)
        except (TypeError, ValueError) as exc:
            raise ScenarioError(f"{ctx}: breakpoints must be [t, u] pairs") from exc
        return SignalSpec(kind="piecewise-linear", breakpoints=pairs)
    raise ScenarioError(f"{ctx}: unknown signal kind {kind!r}")


def _parse_stepping(table: dict, method: str, ctx: str):
    if method in ("epm", "elm"):
        _reject_unknown(table, {"h"}, ctx)
        return _as_float(_require(table, "h", ctx), "h", ctx), None
    allowed = {"epsilon", "n_iter_max", "h_init", "h_min_floor", "h_cap", "h_delta",
               "max_floor_failures"}
    _reject_unknown(table, allowed, ctx)
    kwargs = {}
    for key in allowed:
        if key in table:
            if key in ("n_iter_max", "max_floor_failures"):
                if not isinstance(table[key], int):
                    raise ScenarioError(f"{ctx}: key {key!r} must be an integer")
                kwargs[key] = table[key]
            else:
                kwargs[key] = _as_float(table[key], key, ctx)
    return None, ItmSettings(**kwargs)


def _config_from_dict(doc: dict, ctx: str) -> ScenarioConfig:
    _reject_unknown(
        doc, {"name", "method", "t_end", "initial_output", "controller", "signal", "stepping"}, ctx
    )
    method = _require(doc, "method", ctx)
    if not isinstance(method, str):
        raise ScenarioError(f"{ctx}: 'method' must be a string")
    ctab = _require(doc, "controller", ctx)
    _reject_unknown(ctab, {"kp", "ki", "w_min", "w_max"}, f"{ctx} [controller]")
    try:
        params = PiParams(
            kp=_as_float(_require(ctab, "kp", f"{ctx} [controller]"), "kp", ctx),
            ki=_as_float(_require(ctab, "ki", f"{ctx} [controller]"), "ki", ctx),
            w_min=_as_float(_require(ctab, "w_min", f"{ctx} [controller]"), "w_min", ctx),
            w_max=_as_float(_require(ctab, "w_max", f"{ctx} [controller]"), "w_max", ctx),
        )
        signal = _parse_signal(_require(doc, "signal", ctx), f"{ctx} [signal]")
        h, itm = _parse_stepping(
            _require(doc, "stepping", ctx), method.lower(), f"{ctx} [stepping]"
        )
        return ScenarioConfig(
            name=str(doc.get("name", "unnamed")),
            method=method.lower(),
            t_end=_as_float(_require(doc, "t_end", ctx), "t_end", ctx),
            initial_output=_as_float(_require(doc, "initial_output", ctx), "initial_output", ctx),
            params=params, signal=signal, h=h, itm=itm,
        )
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(f"{ctx}: {exc}") from exc


def bundled_scenario_names() -> list[str]:
    root = resources.files("awpi").joinpath("scenarios")
    return sorted(p.name[: -len(".toml")] for p in root.iterdir() if p.name.endswith(".toml"))


def resolve_scenario(ref: Union[str, Path]) -> tuple[str, bytes]:
    """Resolve a path or bundled scenario name to (label, raw TOML bytes)."""
    path = Path(ref)
    if path.exists():
        return str(path), path.read_bytes()
    name = str(ref)
    if name.endswith(".toml"):
        name = name[: -len(".toml")]
    bundled = resources.files("awpi").joinpath("scenarios").joinpath(f"{name}.toml")
    if bundled.is_file():
        return f"bundled:{name}", bundled.read_bytes()
    raise ScenarioError(
        f"scenario not found: {ref!r} is neither a file nor a bundled scenario "
        f"(available: {', '.join(bundled_scenario_names())})"
    )


def load_scenario(ref: Union[str, Path]) -> ScenarioConfig:
    """Load and validate a scenario from a path or bundled name."""
    label, raw = resolve_scenario(ref)
    try:
        doc = tomllib.loads(raw.decode("utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"{label}: TOML parse error: {exc}") from exc
    return _config_from_dict(doc, label)


def _toml_value(value) -> str:
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    raise TypeError(f"cannot serialize {value!r}")


def save_scenario(config: ScenarioConfig, path: Union[str, Path]) -> None:
    """Write a scenario as TOML; ``load_scenario`` round-trips it exactly."""
    lines = [
        f"name = {_toml_value(config.name)}",
        f"method = {_toml_value(config.method)}",
        f"t_end = {_toml_value(config.t_end)}",
        f"initial_output = {_toml_value(config.initial_output)}",
        "",
        "[controller]",
    ]
    p = config.params
    lines += [f"kp = {_toml_value(p.kp)}", f"ki = {_toml_value(p.ki)}",
              f"w_min = {_toml_value(p.w_min)}", f"w_max = {_toml_value(p.w_max)}", ""]
    s = config.signal
    lines.append("[signal]")
    lines.append(f"kind = {_toml_value(s.kind)}")
    if s.kind == "constant":
        lines.append(f"value = {_toml_value(s.value)}")
    elif s.kind == "triangular-ramp":
        lines += [f"u0 = {_toml_value(s.u0)}", f"t_down = {_toml_value(s.t_down)}",
                  f"t_up = {_toml_value(s.t_up)}", f"slope = {_toml_value(s.slope)}"]
    else:
        pairs = ", ".join(f"[{_toml_value(t)}, {_toml_value(u)}]" for t, u in s.breakpoints)
        lines.append(f"breakpoints = [{pairs}]")
    lines += ["", "[stepping]"]
    if config.method == "itm":
        i = config.itm
        lines += [
            f"epsilon = {_toml_value(i.epsilon)}",
            f"n_iter_max = {_toml_value(i.n_iter_max)}",
            f"h_init = {_toml_value(i.h_init)}",
            f"h_min_floor = {_toml_value(i.h_min_floor)}",
            f"h_cap = {_toml_value(i.h_cap)}",
            f"h_delta = {_toml_value(i.h_delta)}",
            f"max_floor_failures = {_toml_value(i.max_floor_failures)}",
        ]
    else:
        lines.append(f"h = {_toml_value(config.h)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _fmt(value: float) -> str:
    return f"{value:.12g}"


def _timeseries_rows(log: EventLog):
    for rec in log.records:
        st = rec.state_after
        yield {
            "t": st.t, "h_used": rec.h_used, "u": st.u, "x": st.x, "y": st.y, "w": st.w,
            "z_i": int(rec.limiter_after.z_i),
            "z_u": int(rec.limiter_after.z_u),
            "z_l": int(rec.limiter_after.z_l),
            "n_iterations": rec.n_iterations,
            "converged": rec.converged,
        }


def write_timeseries(log: EventLog, path: Union[str, Path], fmt: str = "csv") -> None:
    """One row per step attempt: accepted steps and flagged failed attempts.

    Values carry 12 significant digits; the row time is the end-of-step
    time the values correspond to (the attempted target time for failed
    attempts).
    """
    if not log.records:
        raise ValueError("refusing to write an empty log")
    if fmt not in ("csv", "json-lines"):
        raise ValueError(f"format must be 'csv' or 'json-lines', got {fmt!r}")
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            if fmt == "csv":
                fh.write(",".join(TIMESERIES_COLUMNS) + "\n")
                for row in _timeseries_rows(log):
                    fh.write(
                        ",".join(
                            _fmt(row[c]) if isinstance(row[c], float)
                            else (str(row[c]).lower() if isinstance(row[c], bool) else str(row[c]))
                            for c in TIMESERIES_COLUMNS
                        )
                        + "\n"
                    )
            else:
                for row in _timeseries_rows(log):
                    fh.write(json.dumps(
                        {c: (float(_fmt(row[c])) if isinstance(row[c], float) else row[c])
                         for c in TIMESERIES_COLUMNS}
                    ) + "\n")
    except OSError as exc:
        raise ScenarioError(f"cannot write time series to {path}: {exc}") from exc


def collect_events(log: EventLog) -> list[dict]:
    """Machine-readable event records: transitions, episodes, intervals."""
    events = []
    for t, u, src, dst in analysis.limiter_transitions(log):
        events.append({
            "schema_version": SCHEMA_VERSION, "event": "limiter_transition",
            "t": t, "u": u, "from": src, "to": dst,
        })
    for ep in analysis.detect_deadlock(log):
        events.append({
            "schema_version": SCHEMA_VERSION, "event": "deadlock_episode",
            "t": ep.t, "u": ep.u_onset, "attempts": ep.attempts,
            "exit_h": ep.exit_h, "exit_kind": ep.exit_kind,
        })
    if log.method in ("epm", "elm"):
        for iv in analysis.detect_chattering(log):
            events.append({
                "schema_version": SCHEMA_VERSION, "event": "chattering_interval",
                "t": iv.t_start, "t_end": iv.t_end, "n_toggles": iv.n_toggles,
            })
    events.sort(key=lambda e: (e["t"], e["event"]))
    return events


def write_events(log: EventLog, path: Union[str, Path], fmt: str = "json-lines") -> None:
    """Write the event records; CSV uses one flat superset of columns."""
    events = collect_events(log)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            if fmt == "csv":
                fh.write(",".join(EVENT_COLUMNS) + "\n")
                for ev in events:
                    cells = []
                    for col in EVENT_COLUMNS:
                        val = ev.get(col, "")
                        if isinstance(val, float):
                            cells.append(_fmt(val))
                        elif val is None:
                            cells.append("")
                        else:
                            cells.append(str(val))
                    fh.write(",".join(cells) + "\n")
            else:
                for ev in events:
                    fh.write(json.dumps(ev) + "\n")
    except OSError as exc:
        raise ScenarioError(f"cannot write events to {path}: {exc}") from exc


def build_report(config: ScenarioConfig, log: EventLog, k_max: int = 10) -> dict:
    """Detections plus predictor evaluations for one finished run.

    The scenario echo restates the hard limits and initial output so a
    report is self-describing.  Predictors are evaluated at the first
    unlock attempt found in the log; runs whose integrator never
    unlocks carry ``null`` predictions.
    """
    episodes = analysis.detect_deadlock(log)
    intervals = analysis.detect_chattering(log) if log.method in ("epm", "elm") else []
    relocks = analysis.relock_events(log, "upper")
    unlock = analysis.first_unlock(log)

    predictions = None
    if unlock is not None:
        t_ref = unlock.t
        u_ref = sample(config.signal, t_ref)
        slope = derivative(config.signal, t_ref)
        h_base = config.base_step
        du = slope * h_base
        chatter = None
        if du < 0:
            chatter = {
                "du_per_step": du,
                "k_max": k_max,
                "epm_threshold": analysis.chattering_threshold_epm(
                    config.params, h_base, du, u_ref=u_ref, k_max=k_max).threshold_u,
                "elm_threshold": analysis.chattering_threshold_elm(
                    config.params, h_base, du, u_ref=u_ref, k_max=k_max).threshold_u,
            }
        bounds = None
        if slope < 0:
            h_min = analysis.min_step_avoid_deadlock_differentiable(
                config.params, u_ref, slope, slope)
            h_max = (
                analysis.max_step_exit_deadlock(config.params, u_ref, config.itm.epsilon)
                if config.itm is not None else None
            )
            bounds = {"h_min_avoid": h_min, "h_max_exit": h_max}
        predictions = {
            "evaluated_at": {"t": t_ref, "u": u_ref, "du_dt": slope},
            "chattering": chatter,
            "deadlock_bounds": bounds,
        }

    final = log.final_state()
    return {
        "schema_version": SCHEMA_VERSION,
        "scenario": {
            "name": config.name,
            "method": config.method,
            "t_end": config.t_end,
            "initial_output": config.initial_output,
            "kp": config.params.kp, "ki": config.params.ki,
            "w_min": config.params.w_min, "w_max": config.params.w_max,
            "base_step": config.base_step,
        },
        "counts": {
            "records": len(log.records),
            "accepted": len(log.accepted),
            "failed_attempts": len(log.failed),
            "upper_relocks": len(relocks),
        },
        "chattering_intervals": [
            {"t_start": iv.t_start, "t_end": iv.t_end, "n_toggles": iv.n_toggles}
            for iv in intervals
        ],
        "last_upper_relock": (
            {"t": relocks[-1][0], "u": relocks[-1][1]} if relocks else None
        ),
        "deadlock_episodes": [
            {"t": ep.t, "u_onset": ep.u_onset, "attempts": ep.attempts,
             "exit_h": ep.exit_h, "exit_kind": ep.exit_kind}
            for ep in episodes
        ],
        "predictions": predictions,
        "final_state": {"t": final.t, "x": final.x, "y": final.y,
                        "w": final.w, "u": final.u, "limiter": final.limiter.name},
    }
