"""Functional diagnostics along trajectories.

Evaluates the zero-mean potentials P, Q, R, the four energy terms and four
dissipation terms built from them, the combined functionals L0/L1 and
dissipations D0/D1, structural residuals connecting consecutive samples,
and the convergence metrics (Lq distances, trailing density window, weak
pairings against a fixed low-mode test bank).

Every quadrature reduces through math.fsum, so all reported functionals
are exactly invariant under spatial reflection of the fields.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .errors import DomainError
from .field import Grid, ScalarField, grad_sq_norm, lp_norm, mean
from .motility import (
    MotilityModel,
    admissible_exponents,
    gamma,
    phi,
    phi_gamma_prime,
    psi_values,
)
from .poisson import PoissonSolver

__all__ = [
    "DiagnosticsRecord",
    "DiagnosticsSampler",
    "potentials",
    "liapunov",
    "dissipation",
    "b02_residual",
    "duality_check",
    "convergence_metrics",
    "l0_monotone_ok",
    "int_d0_bound_ok",
    "pattern_flag",
    "CSV_COLUMNS",
]


@dataclass
class DiagnosticsRecord:
    """One sample row: time, conserved quantities, functionals, residuals."""

    t: float
    dt: float
    mass: float
    mean_u: float
    mean_v: float
    ell: tuple
    dee: tuple
    L0: float
    L1: float
    D0: float
    D1: float
    int_D0: float
    int_D1: float
    vq_norms: dict
    u_dist2: float
    up_window: float
    b02_residual: float
    duality_lhs_rhs: tuple
    weak_pairings: dict


def potentials(state, solver: PoissonSolver, solver_q: PoissonSolver | None = None):
    """Zero-mean potentials P = K[u - <u>], Q = K[v - <v>], R = P - Q.

    The mean projection happens inside the solve; pass a second solver to
    keep independent warm starts for the two right-hand sides.
    """
    P = solver.solve(state.u)
    Q = (solver_q or solver).solve(state.v)
    R = ScalarField(P.grid, P.values - Q.values)
    return P, Q, R


def _quad(grid: Grid, terms: np.ndarray) -> float:
    return math.fsum(terms.ravel()) * grid.cell_volume


def liapunov(state, model: MotilityModel, pots) -> dict:
    """Energy fragment: the four terms and their combinations.

    ell3 is reported signed; it acts as an energy term only while the
    concentration mean sits below the conserved density mean.
    """
    P, Q, R = pots
    grid = state.u.grid
    M = mean(state.u)
    mv = mean(state.v)
    ell0 = grad_sq_norm(R)
    # centered form of |v|_2^2 - |domain| <v>^2; identical under the uniform
    # cell quadrature but free of the difference-of-squares cancellation
    ell1 = lp_norm(ScalarField(grid, state.v.values - mv), 2.0) ** 2
    ell2 = 2.0 * _quad(grid, psi_values(model, state.v.values))
    ell3 = (M - mv) * grad_sq_norm(P)
    L0 = ell0 + ell1 + ell2
    return {
        "ell": (ell0, ell1, ell2, ell3),
        "L0": L0,
        "L1": L0 + ell3,
        "mean_u": M,
        "mean_v": mv,
    }


def _d2_face_quadrature(grid: Grid, v: np.ndarray, model: MotilityModel) -> float:
    """Dissipation through the product derivative at face-averaged values.

    Matches the face quadrature of grad_sq_norm so the sign property for
    monotone products carries over discretely.  Faces with zero jump
    contribute exactly zero (guarding the singular derivative at 0).
    """
    h = grid.h
    pieces = []
    if grid.dim == 1:
        dv = np.diff(v) / h[0]
        vf = 0.5 * (v[1:] + v[:-1])
        mask = dv != 0.0
        if np.any(mask):
            pieces.append(phi_gamma_prime(model, vf[mask]) * dv[mask] ** 2 * h[0])
    else:
        hx, hy = h
        cellvol = hx * hy
        dx = np.diff(v, axis=0) / hx
        vfx = 0.5 * (v[1:, :] + v[:-1, :])
        mask = dx != 0.0
        if np.any(mask):
            pieces.append((phi_gamma_prime(model, vfx[mask]) * dx[mask] ** 2 * cellvol).ravel())
        dy = np.diff(v, axis=1) / hy
        vfy = 0.5 * (v[:, 1:] + v[:, :-1])
        mask = dy != 0.0
        if np.any(mask):
            pieces.append((phi_gamma_prime(model, vfy[mask]) * dy[mask] ** 2 * cellvol).ravel())
    if not pieces:
        return 0.0
    return math.fsum(np.concatenate([np.ravel(p) for p in pieces]))


def dissipation(state, model: MotilityModel, pots) -> dict:
    """Dissipation fragment: d0 (monotone coupling), d1 (potential-gradient
    mismatch), d2 (product-derivative flux), d3 (mean-deficit weighted
    density flux), and D0 = d0 + d1 + d2."""
    P, Q, R = pots
    grid = state.u.grid
    u = state.u.values
    v = state.v.values
    M = mean(state.u)
    mv = mean(state.v)
    gam = gamma(model, v)
    d0 = _quad(grid, gam * (phi(model, v) - phi(model, u)) * (v - u))
    d1 = grad_sq_norm(ScalarField(grid, R.values - v))
    d2 = _d2_face_quadrature(grid, v, model)
    d3 = (M - mv) * _quad(grid, u * phi(model, u) * gam)
    return {"dee": (d0, d1, d2, d3), "D0": d0 + d1 + d2}


def b02_residual(prev: dict, cur: dict, grid: Grid) -> float:
    """L2 residual of the discrete identity dQ/dt + v - R = <v>.

    The time derivative is the difference quotient over the sampling
    interval; the remaining fields sit at the newer sample, where the
    identity holds exactly for a single semi-implicit step.
    """
    delta = cur["t"] - prev["t"]
    if delta <= 0.0:
        return 0.0
    resid = (cur["Q"] - prev["Q"]) / delta + cur["v"] - cur["R"] - cur["mean_v"]
    return lp_norm(ScalarField(grid, resid), 2.0)


def duality_check(prev: dict, cur: dict) -> tuple[float, float]:
    """Both sides of the energy-transfer identity for the density potential:
    d/dt (1/2)|grad P|^2 against the integral of (M - u) phi(u) gamma(v).

    The left side is a difference quotient of sampled gradient energies;
    the right side is the trapezoid average of the two endpoint integrals.
    """
    delta = cur["t"] - prev["t"]
    if delta <= 0.0:
        return 0.0, cur["duality_rhs"]
    lhs = 0.5 * (cur["gradP"] - prev["gradP"]) / delta
    rhs = 0.5 * (cur["duality_rhs"] + prev["duality_rhs"])
    return lhs, rhs


def _symmetric_cosine(grid: Grid, mode: int) -> np.ndarray:
    """Cosine test function along x with bitwise reflection parity.

    Built on a half grid and mirrored so that reversing the array equals
    multiplying by (-1)^mode exactly, which keeps the weak pairings
    reflection-invariant at the bit level.
    """
    n = grid.cells[0]
    x = grid.centers(0)
    vals = np.cos(mode * math.pi * x / grid.extents[0])
    half = n // 2
    parity = 1.0 if mode % 2 == 0 else -1.0
    vals[n - half:] = parity * vals[:half][::-1]
    if n % 2 == 1:
        if parity < 0:
            vals[half] = 0.0
    if grid.dim == 2:
        vals = np.broadcast_to(vals[:, None], grid.cells).copy()
    return vals


def convergence_metrics(state, M: float, qs, test_bank: dict) -> dict:
    """Lq distances of v from M plus weak pairings of u - M against the
    fixed test bank."""
    grid = state.u.grid
    vq = {}
    dv = ScalarField(grid, state.v.values - M)
    for q in qs:
        vq[q] = lp_norm(dv, q)
    weak = {}
    du = state.u.values - M
    for name, theta in test_bank.items():
        weak[name] = abs(_quad(grid, du * theta))
    return {"vq_norms": vq, "weak_pairings": weak}


class DiagnosticsSampler:
    """Accumulates DiagnosticsRecords along one run.

    Owns two warm-started Poisson solvers (one per right-hand side), the
    trailing window for the density metric, and the cumulative trapezoid
    integrals of D0 and D1.
    """

    def __init__(
        self,
        model: MotilityModel,
        grid: Grid,
        interval: float,
        window: float = 1.0,
        qs=None,
        p: float | None = None,
        tolerance: float = 1e-11,
    ):
        if interval <= 0.0:
            raise DomainError("sampling interval must be positive")
        if window <= 0.0:
            raise DomainError("window length must be positive")
        self.model = model
        self.grid = grid
        self.interval = float(interval)
        self.window = float(window)
        p_max, q_max = admissible_exponents(model)
        self.p = float(p) if p is not None else p_max
        if qs is None:
            qs = [1.0, 2.0]
            if q_max > 2.0:
                qs.append(0.5 * (2.0 + q_max))
        self.qs = [float(q) for q in qs]
        self._solver_p = PoissonSolver(grid, tolerance=tolerance)
        self._solver_q = PoissonSolver(grid, tolerance=tolerance)
        self.test_bank = {
            "const": np.ones(grid.cells),
            "cos1": _symmetric_cosine(grid, 1),
            "cos2": _symmetric_cosine(grid, 2),
        }
        self.records: list[DiagnosticsRecord] = []
        self.int_D0 = 0.0
        self.int_D1 = 0.0
        self._prev = None
        self._window_hist: list[tuple[float, float]] = []
        self.M = None

    def observe(self, t: float, u_values: np.ndarray, v_values: np.ndarray, dt_last: float = 0.0):
        grid = self.grid
        u = ScalarField(grid, u_values.copy())
        v = ScalarField(grid, v_values.copy())
        state = _StateView(t, u, v)

        pots = potentials(state, self._solver_p, self._solver_q)
        P, Q, R = pots
        lia = liapunov(state, self.model, pots)
        dis = dissipation(state, self.model, pots)
        M = lia["mean_u"]
        if self.M is None:
            self.M = M
        mv = lia["mean_v"]
        mass = M * grid.measure

        ell = lia["ell"]
        dee = dis["dee"]
        D0 = dis["D0"]
        D1 = D0 + 0.5 * ell[3] + dee[3]

        du = ScalarField(grid, u.values - self.M)
        u_dist2 = lp_norm(du, 2.0)
        up_p = lp_norm(du, self.p) ** self.p
        self._window_hist.append((t, up_p))
        up_window = self._window_average(t)

        conv = convergence_metrics(state, self.M, self.qs, self.test_bank)

        gradP = grad_sq_norm(P)
        duality_rhs_point = _quad(
            grid, (self.M - u.values) * phi(self.model, u.values) * gamma(self.model, v.values)
        )
        cur = {
            "t": t,
            "v": v.values,
            "Q": Q.values,
            "R": R.values,
            "mean_v": mv,
            "gradP": gradP,
            "duality_rhs": duality_rhs_point,
        }
        if self._prev is None:
            b02 = math.nan
            lhs_rhs = (math.nan, math.nan)
        else:
            b02 = b02_residual(self._prev, cur, grid)
            lhs_rhs = duality_check(self._prev, cur)
            dt_span = t - self._prev["t"]
            self.int_D0 += 0.5 * dt_span * (self._prev["D0"] + D0)
            self.int_D1 += 0.5 * dt_span * (self._prev["D1"] + D1)
        cur["D0"] = D0
        cur["D1"] = D1
        self._prev = cur

        self.records.append(
            DiagnosticsRecord(
                t=t,
                dt=dt_last,
                mass=mass,
                mean_u=M,
                mean_v=mv,
                ell=ell,
                dee=dee,
                L0=lia["L0"],
                L1=lia["L1"],
                D0=D0,
                D1=D1,
                int_D0=self.int_D0,
                int_D1=self.int_D1,
                vq_norms=conv["vq_norms"],
                u_dist2=u_dist2,
                up_window=up_window,
                b02_residual=b02,
                duality_lhs_rhs=lhs_rhs,
                weak_pairings=conv["weak_pairings"],
            )
        )

    def _window_average(self, t: float) -> float:
        lo = t - self.window
        hist = self._window_hist
        idx = 0
        for i, (ti, _) in enumerate(hist):
            if ti >= lo - 1e-12 * max(1.0, abs(t)):
                idx = i
                break
        hist[:] = hist[idx:]
        if len(hist) < 2:
            return hist[-1][1]
        span = hist[-1][0] - hist[0][0]
        total = 0.0
        for (t0, f0), (t1, f1) in zip(hist[:-1], hist[1:]):
            total += 0.5 * (t1 - t0) * (f0 + f1)
        return total / span if span > 0.0 else hist[-1][1]

    # fixed column order; vq columns appended in sorted q order
    def csv_columns(self) -> list[str]:
        cols = list(CSV_COLUMNS)
        cols.extend(f"vq_{q:g}" for q in self.qs)
        return cols

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write(",".join(self.csv_columns()) + "\n")
            for r in self.records:
                row = [
                    r.t, r.dt, r.mass, r.mean_u, r.mean_v,
                    *r.ell, *r.dee,
                    r.L0, r.L1, r.D0, r.D1, r.int_D0, r.int_D1,
                    r.u_dist2, r.up_window, r.b02_residual,
                    r.duality_lhs_rhs[0], r.duality_lhs_rhs[1],
                    r.weak_pairings["const"],
                    r.weak_pairings["cos1"],
                    r.weak_pairings["cos2"],
                ]
                row.extend(r.vq_norms[q] for q in self.qs)
                fh.write(",".join(repr(float(x)) for x in row) + "\n")

    def summary(self) -> dict:
        recs = self.records
        if not recs:
            return {}
        v1_series = [r.vq_norms[1.0] for r in recs] if 1.0 in self.qs else []
        return {
            "M": self.M,
            "samples": len(recs),
            "t_final": recs[-1].t,
            "L0_initial": recs[0].L0,
            "L0_final": recs[-1].L0,
            "L0_max": max(r.L0 for r in recs),
            "int_D0": self.int_D0,
            "int_D1": self.int_D1,
            "v1_final": v1_series[-1] if v1_series else None,
            "v1_peak": max(v1_series) if v1_series else None,
            "u_dist2_initial": recs[0].u_dist2,
            "u_dist2_final": recs[-1].u_dist2,
            "u_dist2_peak": max(r.u_dist2 for r in recs),
            "sup_v2": max(r.vq_norms.get(2.0, 0.0) for r in recs),
            "sup_psi_integral": max(0.5 * r.ell[2] for r in recs),
            "l0_monotone": l0_monotone_ok(recs),
            "int_d0_bounded": int_d0_bound_ok(recs),
            "pattern_flag": pattern_flag(recs),
        }


CSV_COLUMNS = [
    "t", "dt", "mass", "mean_u", "mean_v",
    "ell0", "ell1", "ell2", "ell3",
    "d0", "d1", "d2", "d3",
    "L0", "L1", "D0", "D1", "int_D0", "int_D1",
    "u_dist2", "up_window", "b02_residual",
    "duality_lhs", "duality_rhs",
    "weak_const", "weak_cos1", "weak_cos2",
]


class _StateView:
    """Minimal (t, u, v) bundle accepted by the functional evaluators."""

    def __init__(self, t, u, v):
        self.t = t
        self.u = u
        self.v = v


def l0_monotone_ok(records, rel_slack: float = 1e-8, dt_factor: float = 10.0) -> bool:
    """Sampled L0 non-increasing within slack rel_slack*L0(0) + dt_factor*dt*D0."""
    if len(records) < 2:
        return True
    base = rel_slack * records[0].L0
    for prev, cur in zip(records[:-1], records[1:]):
        slack = base + dt_factor * cur.dt * abs(cur.D0)
        if cur.L0 > prev.L0 + slack:
            return False
    return True


def int_d0_bound_ok(records, tol: float = 1e-6) -> bool:
    """Cumulative dissipation bounded by half the initial energy at every sample."""
    if not records:
        return True
    bound = 0.5 * records[0].L0 * (1.0 + tol)
    return all(r.int_D0 <= bound for r in records)


def pattern_flag(records, window: float = 10.0, factor: float = 5.0) -> bool:
    """Operational pattern indicator: the density distance grew past
    factor x its initial value and stayed there through the trailing window."""
    if len(records) < 2:
        return False
    base = records[0].u_dist2
    if base <= 0.0:
        return False
    t_end = records[-1].t
    tail = [r for r in records if r.t >= t_end - window]
    if not tail:
        return False
    grew = max(r.u_dist2 for r in records) >= factor * base
    held = all(r.u_dist2 >= factor * base for r in tail)
    return bool(grew and held)
