"""Inverse Neumann Laplacian with zero-mean normalization.

solve_k returns the potential g with -lap(g) = f - <f> and <g> = 0, via
matrix-free conjugate gradients restricted to the zero-mean subspace.  The
no-flux Laplacian is applied in face-flux form so that applying it to any
field telescopes to zero mass exactly, and so that mirroring the input
mirrors the output bit for bit (all CG inner products use math.fsum, which
is permutation-invariant).
"""

from __future__ import annotations

import math

import numpy as np

from .errors import NoConvergence
from .field import Grid, ScalarField

__all__ = ["PoissonSolver", "solve_k", "neg_laplacian", "solve_k_direct_1d"]


def neg_laplacian(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Apply minus the no-flux Laplacian (face-flux form)."""
    h = grid.h
    if grid.dim == 1:
        hx = h[0]
        g = np.diff(values) / hx
        out = np.empty_like(values)
        out[0] = -g[0] / hx
        out[-1] = g[-1] / hx
        out[1:-1] = (g[:-1] - g[1:]) / hx
        return out
    hx, hy = h
    gx = np.diff(values, axis=0) / hx
    gy = np.diff(values, axis=1) / hy
    out = np.zeros_like(values)
    out[:-1, :] += -gx / hx
    out[1:, :] += gx / hx
    out[:, :-1] += -gy / hy
    out[:, 1:] += gy / hy
    return out


def _flat_mean(values: np.ndarray) -> float:
    return math.fsum(values.ravel()) / values.size


class PoissonSolver:
    """Conjugate-gradient solver for the zero-mean Neumann problem.

    tolerance is a relative residual bound; max_iterations defaults to ten
    times the cell count.  A solver instance keeps the last solution as the
    next warm start, so it is reusable but not concurrently shareable.
    """

    def __init__(self, grid: Grid, tolerance: float = 1e-11, max_iterations: int | None = None):
        if tolerance <= 0.0:
            raise ValueError("tolerance must be positive")
        self.grid = grid
        self.tolerance = float(tolerance)
        self.max_iterations = int(max_iterations) if max_iterations else 10 * grid.total_cells
        self.last_iterations = 0
        self.last_residual = 0.0
        self.last_projected_mean = 0.0
        self._warm = None

    def solve(self, f: ScalarField, warm_start: bool = True) -> ScalarField:
        if f.grid != self.grid:
            raise ValueError("field grid does not match solver grid")
        b = f.values.astype(float, copy=True)
        shift = _flat_mean(b)
        self.last_projected_mean = shift
        b -= shift
        scale = math.sqrt(math.fsum((b * b).ravel()))
        if scale == 0.0:
            self.last_iterations = 0
            self.last_residual = 0.0
            self._warm = np.zeros_like(b)
            return ScalarField(self.grid, np.zeros_like(b))

        if warm_start and self._warm is not None and self._warm.shape == b.shape:
            x = self._warm.copy()
            x -= _flat_mean(x)
        else:
            x = np.zeros_like(b)
        r = b - neg_laplacian(self.grid, x)
        p = r.copy()
        rho = math.fsum((r * r).ravel())
        tol2 = (self.tolerance * scale) ** 2
        it = 0
        while rho > tol2:
            if it >= self.max_iterations:
                raise NoConvergence(
                    f"poisson solve stalled at relative residual {math.sqrt(rho) / scale:.3e}"
                    f" after {it} iterations",
                    residual=math.sqrt(rho) / scale,
                    iterations=it,
                )
            ap = neg_laplacian(self.grid, p)
            alpha = rho / math.fsum((p * ap).ravel())
            x += alpha * p
            r -= alpha * ap
            if it % 32 == 31:
                # kill round-off drift off the zero-mean subspace
                r -= _flat_mean(r)
            rho_new = math.fsum((r * r).ravel())
            p *= rho_new / rho
            p += r
            rho = rho_new
            it += 1
        x -= _flat_mean(x)
        self.last_iterations = it
        self.last_residual = math.sqrt(rho) / scale
        self._warm = x.copy()
        return ScalarField(self.grid, x)


def solve_k(solver: PoissonSolver, f: ScalarField) -> ScalarField:
    """Functional alias for PoissonSolver.solve."""
    return solver.solve(f)


def solve_k_direct_1d(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Direct 1D oracle: integrate the flux twice and re-center.

    Exact (up to round-off) solve of the same discrete system; used to
    cross-check the conjugate-gradient path.
    """
    if grid.dim != 1:
        raise ValueError("direct solve is 1D only")
    h = grid.h[0]
    f = values - _flat_mean(values)
    flux = h * np.cumsum(f)            # face flux, zero at both ends
    x = np.concatenate([[0.0], np.cumsum(-h * flux[:-1])])
    return x - _flat_mean(x)
