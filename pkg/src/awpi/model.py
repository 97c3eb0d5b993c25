"""PI controller model with conditional anti-windup limiter.

The controller has one differential state ``x`` (the integrator) and two
algebraic variables: the pre-limit output ``y = kp*u + x`` and the
post-limit output ``w``.  A one-hot status triple gates both the hard
limiter on ``w`` and the integrator freeze:

* interior  -> ``dx/dt = ki*u``,  ``w = y``
* at upper  -> ``dx/dt = 0``,     ``w = w_max``
* at lower  -> ``dx/dt = 0``,     ``w = w_min``

All functions here are pure; the values are immutable and safe to share
between threads.
"""

from __future__ import annotations

from dataclasses import dataclass

# integer status codes shared with the stepping kernels
INTERIOR = 0
UPPER = 1
LOWER = 2

_CODE_NAMES = {INTERIOR: "interior", UPPER: "upper", LOWER: "lower"}


@dataclass(frozen=True)
class LimiterState:
    """One-hot limiter/anti-windup status (exactly one flag set)."""

    z_i: bool
    z_u: bool
    z_l: bool

    def __post_init__(self):
        if int(self.z_i) + int(self.z_u) + int(self.z_l) != 1:
            raise ValueError(
                f"limiter status must be one-hot, got "
                f"(z_i={self.z_i}, z_u={self.z_u}, z_l={self.z_l})"
            )

    @classmethod
    def interior(cls) -> "LimiterState":
        return _INTERIOR_STATE

    @classmethod
    def upper(cls) -> "LimiterState":
        return _UPPER_STATE

    @classmethod
    def lower(cls) -> "LimiterState":
        return _LOWER_STATE

    @classmethod
    def from_code(cls, code: int) -> "LimiterState":
        if code == INTERIOR:
            return _INTERIOR_STATE
        if code == UPPER:
            return _UPPER_STATE
        if code == LOWER:
            return _LOWER_STATE
        raise ValueError(f"unknown limiter code {code!r}")

    @property
    def code(self) -> int:
        if self.z_i:
            return INTERIOR
        return UPPER if self.z_u else LOWER

    @property
    def name(self) -> str:
        return _CODE_NAMES[self.code]


# the three valid statuses, shared by every state and record
_INTERIOR_STATE = LimiterState(True, False, False)
_UPPER_STATE = LimiterState(False, True, False)
_LOWER_STATE = LimiterState(False, False, True)


@dataclass(frozen=True)
class PiParams:
    """Controller gains and hard output limits.

    Parameters
    ----------
    kp : float
        Proportional gain, dimensionless, ``kp >= 0``.
    ki : float
        Integral gain in 1/s, ``ki > 0``.
    w_min, w_max : float
        Hard limits on the post-limit output, ``w_min < w_max``.
    """

    kp: float
    ki: float
    w_min: float
    w_max: float

    def __post_init__(self):
        if not self.w_min < self.w_max:
            raise ValueError(
                f"PiParams requires w_min < w_max, got "
                f"w_min={self.w_min} >= w_max={self.w_max}"
            )
        if not self.ki > 0:
            raise ValueError(f"PiParams requires ki > 0, got ki={self.ki}")
        if not self.kp >= 0:
            raise ValueError(f"PiParams requires kp >= 0, got kp={self.kp}")


@dataclass(frozen=True)
class SimState:
    """Controller variables at one time instant.

    ``w`` always lies in ``[w_min, w_max]`` and is consistent with the
    limiter status (``w = y`` when interior, otherwise the active limit).
    Constructed by :func:`awpi.stepping.initialize` and by the steppers;
    not meant to be assembled by hand.
    """

    t: float
    x: float
    y: float
    w: float
    u: float
    limiter: LimiterState


def update_aw_status(params: PiParams, y: float) -> LimiterState:
    """Classify the pre-limit output against the hard limits.

    Boundary equality maps to the limited state (``y >= w_max`` locks at
    the upper limit, ``y <= w_min`` at the lower one).
    """
    if y >= params.w_max:
        return LimiterState.upper()
    if y <= params.w_min:
        return LimiterState.lower()
    return LimiterState.interior()


def eval_algebraic(
    params: PiParams, x: float, u: float, limiter: LimiterState
) -> tuple[float, float]:
    """Evaluate the algebraic rows for a given limiter status.

    Returns ``(y, w)`` with ``y = kp*u + x`` and ``w`` selected by the
    active branch: ``y`` when interior, else the binding limit.
    """
    y = params.kp * u + x
    if limiter.z_i:
        w = y
    elif limiter.z_u:
        w = params.w_max
    else:
        w = params.w_min
    return y, w


def rate(params: PiParams, u: float, limiter: LimiterState) -> float:
    """Integrator derivative: ``ki*u`` when interior, ``0`` when locked."""
    return params.ki * u if limiter.z_i else 0.0
