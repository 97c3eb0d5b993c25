"""Input signals u(t) consumed by the steppers and predictors.

Every signal reduces to a piecewise-linear breakpoint table, evaluated
exactly (no interpolation error beyond float rounding).  Derivatives are
piecewise constant and right-continuous: at a breakpoint the slope of
the segment *starting* there is returned, so a ramp reversal at ``t``
takes effect on the step that ends after ``t``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

KINDS = ("constant", "triangular-ramp", "piecewise-linear")

# sentinel knot to carry the trailing slope of a triangular ramp
_FAR_TIME = 1e12


@dataclass(frozen=True)
class SignalSpec:
    """Declarative input-signal definition.

    kind = "constant":
        ``value`` everywhere.
    kind = "triangular-ramp":
        rises from ``u0`` with slope ``+slope`` until ``t_down``, falls
        with ``-slope`` until ``t_up``, rises again afterwards.
    kind = "piecewise-linear":
        linear between ``breakpoints`` ((t, u) pairs, t strictly
        increasing); extrapolates the edge segments outside the table.
    """

    kind: str
    value: float = 0.0
    u0: float = 0.0
    t_down: float = 0.0
    t_up: float = 0.0
    slope: float = 1.0
    breakpoints: tuple[tuple[float, float], ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown signal kind {self.kind!r}, expected one of {KINDS}")
        if self.kind == "triangular-ramp":
            if not 0.0 <= self.t_down < self.t_up:
                raise ValueError(
                    f"triangular-ramp requires 0 <= t_down < t_up, got "
                    f"t_down={self.t_down}, t_up={self.t_up}"
                )
            if self.slope <= 0:
                raise ValueError(f"triangular-ramp slope must be > 0, got {self.slope}")
        if self.kind == "piecewise-linear":
            if len(self.breakpoints) < 2:
                raise ValueError("piecewise-linear needs at least two breakpoints")
            ts = [t for t, _ in self.breakpoints]
            if any(b <= a for a, b in zip(ts, ts[1:])):
                raise ValueError("piecewise-linear breakpoints must be strictly increasing in time")


def as_breakpoints(spec: SignalSpec) -> tuple[np.ndarray, np.ndarray]:
    """Canonical breakpoint arrays ``(bx, by)`` for kernel evaluation."""
    if spec.kind == "constant":
        bx = np.array([0.0, 1.0])
        by = np.array([spec.value, spec.value])
    elif spec.kind == "triangular-ramp":
        u_peak = spec.u0 + spec.slope * spec.t_down
        u_valley = u_peak - spec.slope * (spec.t_up - spec.t_down)
        bx = np.array([0.0, spec.t_down, spec.t_up, _FAR_TIME])
        by = np.array(
            [spec.u0, u_peak, u_valley, u_valley + spec.slope * (_FAR_TIME - spec.t_up)]
        )
    else:
        bx = np.array([t for t, _ in spec.breakpoints])
        by = np.array([u for _, u in spec.breakpoints])
    return bx, by


def sample(spec: SignalSpec, t: float) -> float:
    """Evaluate the signal at time ``t`` (exact piecewise-linear)."""
    from .kernels import sample_bp

    bx, by = as_breakpoints(spec)
    return float(sample_bp(bx, by, t))


def derivative(spec: SignalSpec, t: float) -> float:
    """Right-hand slope of the signal at time ``t``."""
    from .kernels import slope_bp

    bx, by = as_breakpoints(spec)
    return float(slope_bp(bx, by, t))


def sample_many(spec: SignalSpec, ts: np.ndarray) -> np.ndarray:
    """Vectorized :func:`sample` over an array of times."""
    bx, by = as_breakpoints(spec)
    idx = np.clip(np.searchsorted(bx, ts, side="right") - 1, 0, len(bx) - 2)
    m = (by[idx + 1] - by[idx]) / (bx[idx + 1] - bx[idx])
    return by[idx] + m * (ts - bx[idx])


def max_abs_slope(spec: SignalSpec) -> float:
    """Largest |slope| over all segments (Lipschitz constant of sample)."""
    bx, by = as_breakpoints(spec)
    return float(np.max(np.abs(np.diff(by) / np.diff(bx))))
