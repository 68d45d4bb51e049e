"""Numpy stepping engine (reference implementation, 1D and 2D).

The density update is explicit in flux form with per-cell compensated
(Kahan) accumulation, so the computed mean drifts by at most a few ulps
over arbitrarily many steps.  The concentration update defaults to an
unconditionally stable semi-implicit solve, written in increment form so
that an exactly homogeneous state is a bit-for-bit fixed point.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import solve_banded

ENGINE_NAME = "pure"
SUPPORTED_DIMS = (1, 2)

STATUS_OK = 0
STATUS_POSITIVITY = 1
STATUS_SINGULAR = 2

_UCLAMP = 1e-12  # floor for the stiffness proxy when the density exponent is < 1


def _gamma(v, a, b, k, s0):
    return a + b * (v + s0) ** (-k)


def _laplacian(w, hs):
    """No-flux Laplacian in face-flux form (exactly telescoping)."""
    if w.ndim == 1:
        hx = hs[0]
        g = np.diff(w) / hx
        out = np.empty_like(w)
        out[0] = g[0] / hx
        out[-1] = -g[-1] / hx
        out[1:-1] = (g[1:] - g[:-1]) / hx
        return out
    hx, hy = hs
    gx = np.diff(w, axis=0) / hx
    gy = np.diff(w, axis=1) / hy
    out = np.zeros_like(w)
    out[:-1, :] += gx / hx
    out[1:, :] -= gx / hx
    out[:, :-1] += gy / hy
    out[:, 1:] -= gy / hy
    return out


def _stiffness(u, v, m, a, b, k, s0):
    uc = np.maximum(u, _UCLAMP)
    return float(np.max(m * uc ** (m - 1.0) * _gamma(v, a, b, k, s0)))


def _solve_semi_implicit_1d(rhs, dt, hx):
    """Tridiagonal solve of ((1+dt) I - dt L) x = rhs with no-flux L."""
    n = rhs.shape[0]
    r = dt / (hx * hx)
    ab = np.zeros((3, n))
    ab[0, 1:] = -r
    ab[1, :] = 1.0 + dt + 2.0 * r
    ab[1, 0] = 1.0 + dt + r
    ab[1, -1] = 1.0 + dt + r
    ab[2, :-1] = -r
    return solve_banded((1, 1), ab, rhs)


def _solve_semi_implicit_2d(rhs, dt, hs, tol=1e-11, max_iter=None):
    """Matrix-free CG for ((1+dt) I - dt L) x = rhs; SPD and well conditioned."""
    if not np.any(rhs):
        return np.zeros_like(rhs)
    scale = math.sqrt(float(np.dot(rhs.ravel(), rhs.ravel())))
    x = np.zeros_like(rhs)
    r = rhs.copy()
    p = r.copy()
    rho = float(np.dot(r.ravel(), r.ravel()))
    budget = max_iter if max_iter else 10 * rhs.size
    tol2 = (tol * scale) ** 2
    it = 0
    while rho > tol2 and it < budget:
        ap = (1.0 + dt) * p - dt * _laplacian(p, hs)
        alpha = rho / float(np.dot(p.ravel(), ap.ravel()))
        x += alpha * p
        r -= alpha * ap
        rho_new = float(np.dot(r.ravel(), r.ravel()))
        p *= rho_new / rho
        p += r
        rho = rho_new
        it += 1
    return x


def _attempt(u, v, comp, dt, hs, m, a, b, k, s0, semi_implicit):
    """One trial step at fixed dt; returns (u2, v2, comp2) or None on undershoot."""
    w = u ** m * _gamma(v, a, b, k, s0)
    du = dt * _laplacian(w, hs)
    # compensated accumulation: comp carries the rounding residue of u
    y = du - comp
    u2 = u + y
    comp2 = (u2 - u) - y
    if u2.min() < 0.0:
        return None
    rhs = dt * (u2 - v + _laplacian(v, hs))
    if semi_implicit:
        if rhs.ndim == 1:
            delta = _solve_semi_implicit_1d(rhs, dt, hs[0])
        else:
            delta = _solve_semi_implicit_2d(rhs, dt, hs)
        v2 = v + delta
    else:
        v2 = v + rhs
    vmin = v2.min()
    if vmin < 0.0:
        # negatives at round-off level are clamped; genuine undershoot retries
        if vmin >= -1e-15 * (abs(v2).max() + 1.0):
            v2 = np.maximum(v2, 0.0)
        else:
            return None
    return u2, v2, comp2


def single_step(u, v, comp, hs, m, a, b, k, s0, cfl, dt_max, retries, semi_implicit, dt_cap=math.inf):
    """Advance the arrays in place by one accepted step.

    Returns (dt_used, status).  dt starts at the stability bound and is
    halved on positivity failures, up to `retries` times.
    """
    if s0 == 0.0 and v.min() <= 0.0:
        return 0.0, STATUS_SINGULAR
    dim = u.ndim
    hmin = min(hs)
    stiff = _stiffness(u, v, m, a, b, k, s0)
    dt = dt_max
    if stiff > 0.0:
        dt = min(dt, cfl * hmin * hmin / (2.0 * dim * stiff))
    if not semi_implicit:
        dt = min(dt, cfl * hmin * hmin / (2.0 * dim))
    dt = min(dt, dt_cap)
    for _ in range(retries + 1):
        res = _attempt(u, v, comp, dt, hs, m, a, b, k, s0, semi_implicit)
        if res is not None:
            u2, v2, comp2 = res
            u[...] = u2
            v[...] = v2
            comp[...] = comp2
            return dt, STATUS_OK
        dt *= 0.5
    return 0.0, STATUS_POSITIVITY


def advance_to(u, v, comp, t, t_target, hs, m, a, b, k, s0, cfl, dt_max, retries, semi_implicit):
    """Step repeatedly until t_target, mutating u, v, comp in place.

    Returns (t, steps, dt_last, status).  The final step is clipped so the
    target time is hit exactly.
    """
    steps = 0
    dt_last = 0.0
    while t < t_target:
        remaining = t_target - t
        dt, status = single_step(
            u, v, comp, hs, m, a, b, k, s0, cfl, dt_max, retries, semi_implicit,
            dt_cap=remaining,
        )
        if status != STATUS_OK:
            return t, steps, dt_last, status
        t = t_target if dt >= remaining else t + dt
        dt_last = dt
        steps += 1
    return t, steps, dt_last, STATUS_OK
