"""Power-law motility family and its closed-form analysis.

The density factor is phi(s) = s^m and the concentration factor is
gamma(s) = a + b/(s + s0)^k.  Everything else in this module is derived
from the product (phi*gamma): its derivative, its primitive psi, the set
of density values where the product decreases (the excitable set), the
monotonicity criterion, the tangency family where the product has a
double root of its derivative, and the exponent ranges consumed by the
convergence diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NonIntegrable, SingularEvaluation

__all__ = [
    "MotilityModel",
    "MotilityAnalysis",
    "phi",
    "gamma",
    "gamma_prime",
    "phi_gamma",
    "phi_gamma_prime",
    "is_monotone",
    "is_strictly_monotone",
    "excitability",
    "in_excitable_set",
    "excitable_set",
    "psi",
    "psi_values",
    "kappa_witness",
    "critical_family",
    "admissible_exponents",
    "analyze",
]


@dataclass(frozen=True)
class MotilityModel:
    """Parameter tuple (m, a, b, k, s0) of the power-law motility family.

    Constraints: m > 0, b > 0, k > 0, a >= 0, s0 >= 0.  With s0 = 0 the
    concentration factor is singular at 0 and evaluation there is rejected.
    """

    m: float
    a: float
    b: float
    k: float
    s0: float

    def __post_init__(self):
        for name in ("m", "a", "b", "k", "s0"):
            val = getattr(self, name)
            if not math.isfinite(val):
                raise DomainError(f"motility parameter {name} must be finite, got {val!r}")
            object.__setattr__(self, name, float(val))
        if self.m <= 0:
            raise DomainError(f"m must be positive, got {self.m}")
        if self.b <= 0:
            raise DomainError(f"b must be positive, got {self.b}")
        if self.k <= 0:
            raise DomainError(f"k must be positive, got {self.k}")
        if self.a < 0:
            raise DomainError(f"a must be nonnegative, got {self.a}")
        if self.s0 < 0:
            raise DomainError(f"s0 must be nonnegative, got {self.s0}")


def _as_array(s):
    arr = np.asarray(s, dtype=float)
    return arr, arr.ndim == 0


def _ret(arr, scalar):
    return float(arr) if scalar else arr


def phi(model: MotilityModel, s):
    """Density factor s^m.  Accepts scalars or arrays; phi(0) = 0."""
    arr, scalar = _as_array(s)
    return _ret(arr ** model.m, scalar)


def gamma(model: MotilityModel, s):
    """Concentration factor a + b/(s + s0)^k.

    Raises SingularEvaluation when s + s0 = 0 anywhere.
    """
    arr, scalar = _as_array(s)
    shifted = arr + model.s0
    if np.any(shifted <= 0.0):
        if np.any(shifted < 0.0):
            raise DomainError("gamma requires s >= 0")
        raise SingularEvaluation("gamma is singular at s = 0 when s0 = 0")
    return _ret(model.a + model.b * shifted ** (-model.k), scalar)


def gamma_prime(model: MotilityModel, s):
    """Derivative of the concentration factor: -b k (s + s0)^(-k-1)."""
    arr, scalar = _as_array(s)
    shifted = arr + model.s0
    if np.any(shifted <= 0.0):
        if np.any(shifted < 0.0):
            raise DomainError("gamma_prime requires s >= 0")
        raise SingularEvaluation("gamma_prime is singular at s = 0 when s0 = 0")
    return _ret(-model.b * model.k * shifted ** (-model.k - 1.0), scalar)


def phi_gamma(model: MotilityModel, s):
    """Product phi(s) * gamma(s); the scalar whose Laplacian drives the density."""
    arr, scalar = _as_array(s)
    shifted = arr + model.s0
    # the s = 0 entries are patched below; suppress their 0 * inf noise
    with np.errstate(divide="ignore", invalid="ignore"):
        out = arr ** model.m * (model.a + model.b * shifted ** (-model.k))
    # s = 0 contributes 0 even when gamma blows up slower than phi vanishes
    if model.s0 == 0.0 and np.any(arr == 0.0):
        if model.m > model.k:
            out = np.where(arr == 0.0, 0.0, out)
        elif model.m == model.k:
            out = np.where(arr == 0.0, model.b, out)
        else:
            raise SingularEvaluation("phi*gamma diverges at s = 0 when s0 = 0 and m < k")
    return _ret(out, scalar)


def phi_gamma_prime(model: MotilityModel, s):
    """Derivative of phi*gamma for s > 0.

    Evaluated as a m s^(m-1) + b s^(m-1) (s+s0)^(-k-1) ((m-k)s + m s0):
    the growing a-term is kept outside the shrinking power prefactor, so
    extreme arguments overflow honestly instead of producing inf*0.
    """
    arr, scalar = _as_array(s)
    shifted = arr + model.s0
    prefactor = arr ** (model.m - 1.0)
    with np.errstate(over="ignore"):
        tail = (
            model.b
            * shifted ** (-model.k - 1.0)
            * ((model.m - model.k) * arr + model.m * model.s0)
        )
        out = prefactor * (model.a * model.m + tail)
    return _ret(out, scalar)


def _criterion_products(model: MotilityModel) -> tuple[float, float]:
    # the monotonicity inequality scaled by b*m*(k+1)^(k+1): pure products
    # on both sides, so a tangency point set up in closed form lands within
    # a couple of ulps instead of drowning in quotient round-off
    lhs = model.a * model.m * (model.k + 1.0) ** (model.k + 1.0) * model.s0 ** model.k
    deficit = max(model.k - model.m, 0.0)
    rhs = model.b * deficit ** (model.k + 1.0)
    return lhs, rhs


_TIE_ULPS = 64.0 * np.finfo(float).eps


def is_monotone(model: MotilityModel) -> bool:
    """Closed-form test for (phi*gamma)' >= 0 on all of (0, inf).

    Ties are resolved with a 64-ulp band so that exactly-critical
    parameter sets (built by critical_family) classify as monotone.
    """
    lhs, rhs = _criterion_products(model)
    return bool(lhs >= rhs - _TIE_ULPS * (lhs + rhs))


def is_strictly_monotone(model: MotilityModel) -> bool:
    """Closed-form test for (phi*gamma)' > 0 on all of (0, inf).

    Strictness fails exactly at the tangency case of the criterion, and in
    the constant-product case m = k with a = s0 = 0.
    """
    lhs, rhs = _criterion_products(model)
    if model.m > model.k:
        return True
    if model.m == model.k:
        return model.a > 0.0 or model.s0 > 0.0
    return bool(lhs > rhs + _TIE_ULPS * (lhs + rhs))


def excitability(model: MotilityModel, s):
    """Signed excitability margin; positive exactly on the excitable set.

    Defined as (k/m) * s/(s+s0) * b/(b + a (s+s0)^k) - 1, which has the
    same sign as -(phi*gamma)'.
    """
    arr, scalar = _as_array(s)
    shifted = arr + model.s0
    val = (
        (model.k / model.m)
        * (arr / shifted)
        * (model.b / (model.b + model.a * shifted ** model.k))
        - 1.0
    )
    return _ret(val, scalar)


def in_excitable_set(model: MotilityModel, s: float) -> bool:
    return bool(excitability(model, s) > 0.0)


def excitable_set(model: MotilityModel, s_grid) -> list[tuple[float, float]]:
    """Maximal open intervals of the grid range where excitability is positive.

    Interval endpoints falling between grid points are refined by bisection
    to width 1e-10 (capped at 200 halvings).  Endpoints at the grid edges
    are truncated there.
    """
    grid = np.asarray(s_grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise DomainError("s_grid must be a 1D array with at least two points")
    if np.any(grid <= 0.0) or np.any(np.diff(grid) <= 0.0):
        raise DomainError("s_grid must be positive and strictly increasing")

    vals = excitability(model, grid)
    pos = vals > 0.0
    if not np.any(pos):
        return []

    def refine(lo, hi):
        # excitability changes sign in (lo, hi); locate the crossing
        flo = excitability(model, lo)
        for _ in range(200):
            if hi - lo <= 1e-10:
                break
            mid = 0.5 * (lo + hi)
            fmid = excitability(model, mid)
            if (fmid > 0.0) == (flo > 0.0):
                lo, flo = mid, fmid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    intervals = []
    i = 0
    n = grid.size
    while i < n:
        if not pos[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and pos[j + 1]:
            j += 1
        left = grid[i] if i == 0 else refine(grid[i - 1], grid[i])
        right = grid[j] if j == n - 1 else refine(grid[j], grid[j + 1])
        intervals.append((float(left), float(right)))
        i = j + 1
    return intervals


def _check_integrable_at_zero(model: MotilityModel):
    if model.s0 == 0.0 and model.m - model.k <= -1.0:
        raise NonIntegrable(
            "phi*gamma ~ s^(m-k) near 0 with m-k <= -1 has no finite primitive"
        )


def _psi_closed_form_s0_zero(model: MotilityModel, arr):
    # exact antiderivative of a s^m + b s^(m-k); valid whenever m - k > -1
    e1 = model.m + 1.0
    e2 = model.m + 1.0 - model.k
    return model.a * arr ** e1 / e1 + model.b * arr ** e2 / e2


def _adaptive_simpson(f, lo: float, hi: float, rel_tol: float, max_intervals: int) -> float:
    """Adaptive Simpson quadrature with an interval-count cap.

    The tolerance is distributed over subdivisions in the classic halving
    style; the cap stops refinement (best-effort result) rather than failing.
    """
    if hi <= lo:
        return 0.0
    flo, fhi = f(lo), f(hi)
    mid = 0.5 * (lo + hi)
    fmid = f(mid)
    whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)
    eps0 = rel_tol * (abs(whole) + 1e-300)
    total = 0.0
    intervals = 1
    stack = [(lo, hi, flo, fmid, fhi, whole, eps0)]
    while stack:
        a, bnd, fa, fm, fb, s_whole, eps = stack.pop()
        m1 = 0.5 * (a + bnd)
        lm = 0.5 * (a + m1)
        rm = 0.5 * (m1 + bnd)
        flm, frm = f(lm), f(rm)
        s_left = (m1 - a) / 6.0 * (fa + 4.0 * flm + fm)
        s_right = (bnd - m1) / 6.0 * (fm + 4.0 * frm + fb)
        s2 = s_left + s_right
        if abs(s2 - s_whole) <= 15.0 * eps or intervals >= max_intervals:
            total += s2 + (s2 - s_whole) / 15.0
        else:
            intervals += 2
            half_eps = 0.5 * eps
            stack.append((a, m1, fa, flm, fm, s_left, half_eps))
            stack.append((m1, bnd, fm, frm, fb, s_right, half_eps))
    return total


def psi(model: MotilityModel, s: float) -> float:
    """Primitive of phi*gamma on [0, s].

    Closed form when s0 = 0 (power antiderivatives); otherwise adaptive
    Simpson quadrature at relative tolerance 1e-10 with a 2^20 interval cap.
    Raises NonIntegrable when s0 = 0 and m - k <= -1.
    """
    _check_integrable_at_zero(model)
    s = float(s)
    if s < 0.0:
        raise DomainError("psi requires s >= 0")
    if s == 0.0:
        return 0.0
    if model.s0 == 0.0:
        return float(_psi_closed_form_s0_zero(model, s))

    def integrand(x):
        return x ** model.m * (model.a + model.b * (x + model.s0) ** (-model.k))

    return _adaptive_simpson(integrand, 0.0, s, 1e-10, 1 << 20)


_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)


def _panel_integrals(model: MotilityModel, lo, hi):
    """Gauss-Legendre 12 on a batch of panels given as equal-length arrays."""
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    nodes = mid[:, None] + half[:, None] * _GL_X[None, :]
    vals = nodes ** model.m * (model.a + model.b * (nodes + model.s0) ** (-model.k))
    return (vals @ _GL_W) * half


def _split_geometric(lo: float, hi: float, max_ratio: float = 2.0):
    """Panel edges from lo to hi with per-panel ratio at most max_ratio."""
    if lo <= 0.0:
        raise ValueError("geometric split needs lo > 0")
    n = max(1, int(math.ceil(math.log(hi / lo) / math.log(max_ratio))))
    return lo * (hi / lo) ** (np.arange(n + 1) / n)


def psi_values(model: MotilityModel, values) -> np.ndarray:
    """Primitive of phi*gamma evaluated at every array entry.

    Batch path used by the functional diagnostics: sorts the unique values,
    integrates segment by segment with composite Gauss-Legendre panels
    (scale-limited so each panel stays well inside the integrand's
    analyticity region), and accumulates.  Agrees with psi() to ~1e-10
    relative; exact closed form when s0 = 0.
    """
    _check_integrable_at_zero(model)
    arr = np.asarray(values, dtype=float)
    if np.any(arr < 0.0):
        raise DomainError("psi_values requires nonnegative entries")
    if model.s0 == 0.0:
        return _psi_closed_form_s0_zero(model, arr)

    flat = arr.ravel()
    out = np.zeros_like(flat)
    pos_mask = flat > 0.0
    if not np.any(pos_mask):
        return out.reshape(arr.shape)
    uniq, inverse = np.unique(flat[pos_mask], return_inverse=True)

    lows = []
    highs = []
    seg_of_panel = []

    # leading segment [0, uniq[0]]: geometric grading toward 0 plus an
    # analytic stub for the remaining power-law tail
    first = uniq[0]
    tail = first * 2.0 ** -48
    stub = (model.a + model.b * model.s0 ** (-model.k)) * tail ** (model.m + 1.0) / (
        model.m + 1.0
    )
    edges = _split_geometric(tail, first)
    lows.append(edges[:-1])
    highs.append(edges[1:])
    seg_of_panel.append(np.zeros(edges.size - 1, dtype=np.intp))

    if uniq.size > 1:
        seg_lo = uniq[:-1]
        seg_hi = uniq[1:]
        ratio_s = seg_hi / seg_lo
        ratio_shift = (seg_hi + model.s0) / (seg_lo + model.s0)
        easy = (ratio_s <= 2.0) & (ratio_shift <= 2.0)
        if np.any(easy):
            lows.append(seg_lo[easy])
            highs.append(seg_hi[easy])
            seg_of_panel.append(np.nonzero(easy)[0] + 1)
        for idx in np.nonzero(~easy)[0]:
            edges = _split_geometric(seg_lo[idx], seg_hi[idx])
            lows.append(edges[:-1])
            highs.append(edges[1:])
            seg_of_panel.append(np.full(edges.size - 1, idx + 1, dtype=np.intp))

    lo_all = np.concatenate(lows)
    hi_all = np.concatenate(highs)
    seg_all = np.concatenate(seg_of_panel)
    panel_vals = _panel_integrals(model, lo_all, hi_all)

    seg_sums = np.zeros(uniq.size, dtype=float)
    np.add.at(seg_sums, seg_all, panel_vals)
    cum = np.cumsum(seg_sums) + stub
    out[pos_mask] = cum[inverse]
    return out.reshape(arr.shape)


def kappa_witness(model: MotilityModel, s_max: float, samples: int = 2048) -> float:
    """Sampled witness for the growth bound phi*gamma <= kappa (1 + psi).

    Returns the supremum of (phi*gamma)(s) / (1 + psi(s)) over a log-spaced
    sample of (0, s_max].  This is a numerical lower bound for the true
    constant, not a proof.
    """
    if s_max <= 0.0:
        raise DomainError("s_max must be positive")
    pts = np.geomspace(s_max * 1e-8, s_max, samples)
    ratio = phi_gamma(model, pts) / (1.0 + psi_values(model, pts))
    return float(np.max(ratio))


def critical_family(k: float, m: float, s0: float) -> tuple[float, float]:
    """Tangency family: the a/b ratio at which the product derivative has a
    double root, together with the root s1 = (m+1) s0 / (k-m).

    Requires 0 < m < k/2 and s0 > 0.
    """
    if not (0.0 < m < k / 2.0):
        raise DomainError(f"critical_family requires 0 < m < k/2, got m={m}, k={k}")
    if s0 <= 0.0:
        raise DomainError("critical_family requires s0 > 0")
    a_over_b = (k - m) ** (k + 1.0) / (m * (k + 1.0) ** (k + 1.0) * s0 ** k)
    s1 = (m + 1.0) * s0 / (k - m)
    return float(a_over_b), float(s1)


def admissible_exponents(model: MotilityModel) -> tuple[float, float]:
    """Exponent pair (p_max, q_max_exclusive) for the convergence metrics.

    Uses the canonical substitution (alpha, theta) = (m, 0) for m >= 1 and
    (1, 1-m) for m < 1; p_max is clamped to [1, 2) with an explicit 1e-12
    gap below 2, and q_max_exclusive exceeds 2 only when m > k + 1.
    """
    m, k = model.m, model.k
    if m >= 1.0:
        alpha, theta = m, 0.0
    else:
        alpha, theta = 1.0, 1.0 - m
    p_max = min(
        2.0 * (alpha + 1.0) / (k + theta + 2.0),
        2.0 * (m + 1.0) / (k + 2.0),
        2.0 - 1e-12,
    )
    p_max = max(1.0, p_max)
    q_max_exclusive = max(2.0, m + 1.0 - k) if m > k + 1.0 else 2.0
    return float(p_max), float(q_max_exclusive)


@dataclass(frozen=True)
class MotilityAnalysis:
    """Derived analytic facts for one parameter tuple."""

    monotone: bool
    strictly_monotone: bool
    excitable_intervals: list[tuple[float, float]] = field(default_factory=list)
    kappa: float | None = None
    p_max: float = 1.0
    q_max_exclusive: float = 2.0

    def to_dict(self) -> dict:
        return {
            "monotone": self.monotone,
            "strictly_monotone": self.strictly_monotone,
            "excitable_intervals": [list(iv) for iv in self.excitable_intervals],
            "kappa": self.kappa,
            "p_max": self.p_max,
            "q_max_exclusive": self.q_max_exclusive,
        }


def analyze(model: MotilityModel, s_max: float = 1e4, grid_points: int = 4096) -> MotilityAnalysis:
    """Full analysis record: criterion verdicts, excitable intervals on a
    log grid up to s_max, growth-bound witness, admissible exponents."""
    grid = np.geomspace(1e-8, s_max, grid_points)
    intervals = excitable_set(model, grid)
    try:
        kappa = kappa_witness(model, s_max)
    except NonIntegrable:
        kappa = None
    p_max, q_max = admissible_exponents(model)
    return MotilityAnalysis(
        monotone=is_monotone(model),
        strictly_monotone=is_strictly_monotone(model),
        excitable_intervals=intervals,
        kappa=kappa,
        p_max=p_max,
        q_max_exclusive=q_max,
    )
