"""Hot stepping kernels, shared by the numba and pure-Python backends.

Everything in this module is written against scalars, integer status
codes (0 interior / 1 upper / 2 lower) and preallocated numpy arrays so
numba can compile it in nopython mode.  ``awpi.stepping`` wraps these in
the record-producing public API.  The ``py_*`` aliases always point to
the uncompiled functions; the unprefixed names are the dispatched
(possibly compiled) versions.  See :mod:`awpi._backend` for selection.
"""

from __future__ import annotations

import numpy as np

from ._backend import jit

# status codes (mirrors awpi.model)
_INTERIOR = 0
_UPPER = 1
_LOWER = 2

# convergence codes for the implicit step
ITM_FAILED = 0
ITM_CONVERGED = 1
ITM_TOLERANCE = 2


def py_sample_bp(bx, by, t):
    """Exact piecewise-linear evaluation over breakpoint arrays."""
    n = bx.shape[0]
    i = np.searchsorted(bx, t, side="right") - 1
    if i < 0:
        i = 0
    elif i > n - 2:
        i = n - 2
    m = (by[i + 1] - by[i]) / (bx[i + 1] - bx[i])
    return by[i] + m * (t - bx[i])


def py_slope_bp(bx, by, t):
    """Right-hand segment slope at ``t``."""
    n = bx.shape[0]
    i = np.searchsorted(bx, t, side="right") - 1
    if i < 0:
        i = 0
    elif i > n - 2:
        i = n - 2
    return (by[i + 1] - by[i]) / (bx[i + 1] - bx[i])


def py_aw_code(y, w_min, w_max):
    """Status code from the pre-limit output (>= / <= lock at the limit)."""
    if y >= w_max:
        return _UPPER
    if y <= w_min:
        return _LOWER
    return _INTERIOR


sample_bp = jit(py_sample_bp)
slope_bp = jit(py_slope_bp)
aw_code = jit(py_aw_code)


def py_epm_single(kp, ki, w_min, w_max, x, u_next, h):
    """One explicit-partitioned step.

    Algebraic pass first with the old state, then the explicit (forward
    Euler) state update gated by the freshly classified status; the
    state change becomes visible in ``y`` only at the next step.
    Returns ``(x_new, y, w, z_after)``.
    """
    y = kp * u_next + x
    z = aw_code(y, w_min, w_max)
    if z == _INTERIOR:
        x_new = x + h * (ki * u_next)
        w = y
    else:
        x_new = x
        w = w_max if z == _UPPER else w_min
    return x_new, y, w, z


def py_elm_single(kp, ki, w_min, w_max, x, z_prev, u_next, h):
    """One execution-list step.

    The integrator block runs first, gated by the *previous* step's
    status, then the summation and limiter blocks see the fresh state.
    Returns ``(x_new, y, w, z_after)``.
    """
    if z_prev == _INTERIOR:
        x_new = x + h * (ki * u_next)
    else:
        x_new = x
    y = kp * u_next + x_new
    z = aw_code(y, w_min, w_max)
    if z == _INTERIOR:
        w = y
    else:
        w = w_max if z == _UPPER else w_min
    return x_new, y, w, z


def py_itm_single(
    kp, ki, w_min, w_max, x_prev, f_prev, z_in, u_next, h, eps, n_iter_max,
    tr_x, tr_y, tr_w, tr_z,
):
    """One implicit-trapezoidal step with per-iteration status refresh.

    Each iteration solves the linear equation set of the currently
    active branch exactly (trapezoidal rule on the state row, carrying
    the stored derivative ``f_prev`` of the last accepted step), then
    re-classifies the status from the fresh ``y``.  The loop exits

    * ``ITM_CONVERGED`` when the max variable increment between
      successive iterates drops below ``eps`` and the post-solution
      status equals the pre-solution status,
    * ``ITM_TOLERANCE`` when the increment test passes while the status
      still toggles (the tolerance exit that ends a deadlock),
    * ``ITM_FAILED`` when ``n_iter_max`` solves are exhausted.

    Iterates are recorded in the ``tr_*`` arrays (length >= n_iter_max);
    ``tr_z`` holds the status each solve was performed under.
    Returns ``(x, y, w, z_post, n_iter, code)``.
    """
    z = z_in
    x_it = x_prev
    y_it = 0.0
    w_it = 0.0
    z_post = z_in
    for it in range(1, n_iter_max + 1):
        x_last = x_it
        y_last = y_it
        w_last = w_it
        if z == _INTERIOR:
            x_it = x_prev + 0.5 * h * (ki * u_next + f_prev)
        else:
            x_it = x_prev + 0.5 * h * f_prev
        y_it = kp * u_next + x_it
        if z == _INTERIOR:
            w_it = y_it
        elif z == _UPPER:
            w_it = w_max
        else:
            w_it = w_min
        z_post = aw_code(y_it, w_min, w_max)
        tr_x[it - 1] = x_it
        tr_y[it - 1] = y_it
        tr_w[it - 1] = w_it
        tr_z[it - 1] = z
        if it >= 2:
            inc = abs(x_it - x_last)
            dy = abs(y_it - y_last)
            if dy > inc:
                inc = dy
            dw = abs(w_it - w_last)
            if dw > inc:
                inc = dw
            if inc < eps:
                code = ITM_CONVERGED if z_post == z else ITM_TOLERANCE
                return x_it, y_it, w_it, z_post, it, code
        z = z_post
    return x_it, y_it, w_it, z_post, n_iter_max, ITM_FAILED


epm_single = jit(py_epm_single)
elm_single = jit(py_elm_single)
itm_single = jit(py_itm_single)


def py_epm_march(
    bx, by, kp, ki, w_min, w_max, x0, z0, t0, h, n,
    out_u, out_x, out_y, out_w, out_zb, out_za,
):
    """Fixed-step explicit-partitioned march over ``n`` steps."""
    x = x0
    z = z0
    for k in range(n):
        u = sample_bp(bx, by, t0 + (k + 1) * h)
        x_new, y, w, z_new = epm_single(kp, ki, w_min, w_max, x, u, h)
        out_u[k] = u
        out_x[k] = x_new
        out_y[k] = y
        out_w[k] = w
        out_zb[k] = z
        out_za[k] = z_new
        x = x_new
        z = z_new


def py_elm_march(
    bx, by, kp, ki, w_min, w_max, x0, z0, t0, h, n,
    out_u, out_x, out_y, out_w, out_zb, out_za,
):
    """Fixed-step execution-list march over ``n`` steps."""
    x = x0
    z = z0
    for k in range(n):
        u = sample_bp(bx, by, t0 + (k + 1) * h)
        x_new, y, w, z_new = elm_single(kp, ki, w_min, w_max, x, z, u, h)
        out_u[k] = u
        out_x[k] = x_new
        out_y[k] = y
        out_w[k] = w
        out_zb[k] = z
        out_za[k] = z_new
        x = x_new
        z = z_new


epm_march = jit(py_epm_march)
elm_march = jit(py_elm_march)
