# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled 1D stepping loop.

Same algorithm as kernels.pure, step for step: explicit flux-form density
update with per-cell compensated accumulation, semi-implicit concentration
update via a tridiagonal (Thomas) solve in increment form.  The whole time
loop runs without the GIL so concurrent sweeps scale across threads.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport pow, fmin, fmax, sqrt

cnp.import_array()


cdef inline double _xpow(double base, double e) noexcept nogil:
    # the presets of interest all use small integer or half-integer
    # exponents; libm pow dominates the step cost unless special-cased
    if e == 1.0:
        return base
    if e == 2.0:
        return base * base
    if e == -1.0:
        return 1.0 / base
    if e == -2.0:
        return 1.0 / (base * base)
    if e == 0.0:
        return 1.0
    if e == 3.0:
        return base * base * base
    if e == 0.5:
        return sqrt(base)
    return pow(base, e)

ENGINE_NAME = "compiled"
SUPPORTED_DIMS = (1,)

cdef enum:
    _OK = 0
    _POSITIVITY = 1
    _SINGULAR = 2

STATUS_OK = _OK
STATUS_POSITIVITY = _POSITIVITY
STATUS_SINGULAR = _SINGULAR

cdef double UCLAMP = 1e-12


cdef int _attempt(double[::1] u, double[::1] v, double[::1] comp,
                  double[::1] w, double[::1] flux,
                  double[::1] utmp, double[::1] ctmp, double[::1] vtmp,
                  double[::1] rhs, double[::1] cp, double[::1] dp,
                  double dt, double h, double m, double a, double b,
                  double k, double s0, bint semi_implicit) noexcept nogil:
    """One trial step at fixed dt into the tmp arrays; 1 on undershoot."""
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t i
    cdef double y, tt, umin, g, lapv, denom, r, vmin, vmax, prev_flux

    for i in range(n):
        w[i] = _xpow(u[i], m) * (a + b * _xpow(v[i] + s0, -k))
    for i in range(n - 1):
        flux[i] = (w[i + 1] - w[i]) / h

    umin = 0.0
    prev_flux = 0.0
    for i in range(n):
        if i < n - 1:
            g = flux[i] - prev_flux
            prev_flux = flux[i]
        else:
            g = -prev_flux
        # compensated accumulation of the explicit update
        y = dt * (g / h) - comp[i]
        tt = u[i] + y
        ctmp[i] = (tt - u[i]) - y
        utmp[i] = tt
        if tt < umin:
            umin = tt
    if umin < 0.0:
        return 1

    # rhs of the increment system: dt (u_new - v + lap v)
    for i in range(n - 1):
        flux[i] = (v[i + 1] - v[i]) / h
    prev_flux = 0.0
    for i in range(n):
        if i < n - 1:
            lapv = (flux[i] - prev_flux) / h
            prev_flux = flux[i]
        else:
            lapv = -prev_flux / h
        rhs[i] = dt * (utmp[i] - v[i] + lapv)

    if semi_implicit:
        # Thomas solve of ((1+dt) I - dt L) delta = rhs; boundary rows have
        # a single off-diagonal neighbour
        r = dt / (h * h)
        denom = 1.0 + dt + r
        cp[0] = -r / denom
        dp[0] = rhs[0] / denom
        for i in range(1, n):
            denom = (1.0 + dt + (r if i == n - 1 else 2.0 * r)) + r * cp[i - 1]
            cp[i] = -r / denom
            dp[i] = (rhs[i] + r * dp[i - 1]) / denom
        vtmp[n - 1] = v[n - 1] + dp[n - 1]
        tt = dp[n - 1]
        for i in range(n - 2, -1, -1):
            tt = dp[i] - cp[i] * tt
            vtmp[i] = v[i] + tt
    else:
        for i in range(n):
            vtmp[i] = v[i] + rhs[i]

    vmin = vtmp[0]
    vmax = fabs_local(vtmp[0])
    for i in range(1, n):
        if vtmp[i] < vmin:
            vmin = vtmp[i]
        if fabs_local(vtmp[i]) > vmax:
            vmax = fabs_local(vtmp[i])
    if vmin < 0.0:
        if vmin >= -1e-15 * (vmax + 1.0):
            for i in range(n):
                if vtmp[i] < 0.0:
                    vtmp[i] = 0.0
        else:
            return 1
    return 0


cdef inline double fabs_local(double x) noexcept nogil:
    return -x if x < 0.0 else x


def advance_to(cnp.ndarray[double, ndim=1] u_arr,
               cnp.ndarray[double, ndim=1] v_arr,
               cnp.ndarray[double, ndim=1] comp_arr,
               double t, double t_target, hs,
               double m, double a, double b, double k, double s0,
               double cfl, double dt_max, int retries, bint semi_implicit):
    """Step repeatedly until t_target, mutating the arrays in place.

    Returns (t, steps, dt_last, status); same contract as kernels.pure.
    """
    cdef double h = float(hs[0])
    cdef double[::1] u = u_arr
    cdef double[::1] v = v_arr
    cdef double[::1] comp = comp_arr
    cdef Py_ssize_t n = u.shape[0]

    scratch = np.empty((8, n))
    cdef double[::1] w = scratch[0]
    cdef double[::1] flux = scratch[1]
    cdef double[::1] utmp = scratch[2]
    cdef double[::1] ctmp = scratch[3]
    cdef double[::1] vtmp = scratch[4]
    cdef double[::1] rhs = scratch[5]
    cdef double[::1] cp = scratch[6]
    cdef double[::1] dp = scratch[7]

    cdef long steps = 0
    cdef int status = _OK
    cdef int attempt, fail
    cdef double dt_last = 0.0
    cdef double dt, remaining, stiff, vmin, val
    cdef Py_ssize_t i

    with nogil:
        while t < t_target:
            remaining = t_target - t

            if s0 == 0.0:
                vmin = v[0]
                for i in range(1, n):
                    if v[i] < vmin:
                        vmin = v[i]
                if vmin <= 0.0:
                    status = _SINGULAR
                    break

            stiff = 0.0
            for i in range(n):
                val = m * _xpow(fmax(u[i], UCLAMP), m - 1.0) \
                    * (a + b * _xpow(v[i] + s0, -k))
                if val > stiff:
                    stiff = val
            dt = dt_max
            if stiff > 0.0:
                dt = fmin(dt, cfl * h * h / (2.0 * stiff))
            if not semi_implicit:
                dt = fmin(dt, cfl * h * h / 2.0)
            dt = fmin(dt, remaining)

            fail = 1
            for attempt in range(retries + 1):
                if _attempt(u, v, comp, w, flux, utmp, ctmp, vtmp, rhs, cp, dp,
                            dt, h, m, a, b, k, s0, semi_implicit) == 0:
                    fail = 0
                    break
                dt *= 0.5
            if fail:
                status = _POSITIVITY
                break

            for i in range(n):
                u[i] = utmp[i]
                v[i] = vtmp[i]
                comp[i] = ctmp[i]
            if dt >= remaining:
                t = t_target
            else:
                t = t + dt
            dt_last = dt
            steps += 1

    return t, steps, dt_last, status
