import math

import numpy as np
import pytest

from chemolab.errors import NoConvergence
from chemolab.field import Grid, ScalarField, grad_sq_norm, lp_norm, mean
from chemolab.poisson import PoissonSolver, neg_laplacian, solve_k, solve_k_direct_1d

RT_TOL = 1e-10
ADJ_TOL = 1e-9


def _random_zero_mean(grid, seed):
    rng = np.random.default_rng(seed)
    vals = rng.standard_normal(grid.cells)
    vals -= vals.mean()
    return ScalarField(grid, vals)


def test_neg_laplacian_annihilates_constants():
    g = Grid.line(10.0, 64)
    out = neg_laplacian(g, np.full(64, 3.7))
    assert np.all(out == 0.0)
    g2 = Grid.rectangle((4.0, 3.0), (16, 12))
    out2 = neg_laplacian(g2, np.full((16, 12), -2.0))
    assert np.all(out2 == 0.0)


def test_neg_laplacian_eigenvector_1d():
    # cell-centered cosines are exact eigenvectors of the face-flux operator
    L, n = 10.0, 64
    g = Grid.line(L, n)
    x = g.centers(0)
    h = L / n
    j = 5
    lam = (2.0 - 2.0 * math.cos(j * math.pi / n)) / h**2
    f = np.cos(j * math.pi * x / L)
    out = neg_laplacian(g, f)
    assert np.allclose(out, lam * f, rtol=1e-11, atol=1e-12)


def test_solver_eigenfunction_discrete_exact():
    L, n = 10.0, 96
    g = Grid.line(L, n)
    x = g.centers(0)
    h = L / n
    j = 3
    lam = (2.0 - 2.0 * math.cos(j * math.pi / n)) / h**2
    f = ScalarField(g, np.cos(j * math.pi * x / L))
    sol = PoissonSolver(g)
    kf = sol.solve(f)
    assert np.allclose(kf.values, f.values / lam, rtol=1e-10, atol=1e-12)


def test_eigenfunction_error_second_order():
    # error against the continuum eigenpair shrinks 4x per refinement
    L, j = 10.0, 3
    q = j * math.pi / L
    errs = {}
    for n in (64, 128, 256):
        g = Grid.line(L, n)
        x = g.centers(0)
        f = ScalarField(g, np.cos(q * x))
        kf = PoissonSolver(g).solve(f)
        errs[n] = lp_norm(ScalarField(g, kf.values - f.values / q**2), 2.0)
    assert 3.5 <= errs[64] / errs[128] <= 4.5
    assert 3.5 <= errs[128] / errs[256] <= 4.5


def test_round_trip_residual():
    g = Grid.line(10.0, 128)
    sol = PoissonSolver(g)
    for seed in range(5):
        f = _random_zero_mean(g, seed)
        kf = sol.solve(f, warm_start=False)
        resid = neg_laplacian(g, kf.values) - f.values
        rel = np.linalg.norm(resid) / np.linalg.norm(f.values)
        assert rel <= RT_TOL


def test_matches_direct_1d_oracle():
    g = Grid.line(10.0, 128)
    sol = PoissonSolver(g)
    for seed in range(5):
        f = _random_zero_mean(g, seed + 50)
        kf = sol.solve(f, warm_start=False)
        direct = solve_k_direct_1d(g, f.values)
        assert np.max(np.abs(kf.values - direct)) <= 1e-12


def test_self_adjoint_and_positive():
    g = Grid.line(10.0, 96)
    sol = PoissonSolver(g)
    vol = g.cell_volume
    rng = np.random.default_rng(9)
    for _ in range(10):
        f = rng.standard_normal(96)
        f -= f.mean()
        h = rng.standard_normal(96)
        h -= h.mean()
        kf = sol.solve(ScalarField(g, f), warm_start=False).values
        kh = sol.solve(ScalarField(g, h), warm_start=False).values
        s1 = math.fsum(f * kh) * vol
        s2 = math.fsum(h * kf) * vol
        assert abs(s1 - s2) <= ADJ_TOL * max(abs(s1), abs(s2), 1e-12)
        energy = math.fsum(f * kf) * vol
        assert energy >= -1e-12
        # summation by parts is exact for the face-flux form
        assert energy == pytest.approx(grad_sq_norm(ScalarField(g, kf)), rel=1e-9)


def test_energy_zero_only_for_constants():
    g = Grid.line(10.0, 64)
    sol = PoissonSolver(g)
    f = ScalarField.constant(g, 2.0)
    kf = sol.solve(f)
    assert np.all(kf.values == 0.0)
    assert sol.last_iterations == 0


def test_linearity():
    g = Grid.line(10.0, 64)
    sol = PoissonSolver(g)
    f = _random_zero_mean(g, 1)
    h = _random_zero_mean(g, 2)
    a, b = 2.5, -1.25
    combo = ScalarField(g, a * f.values + b * h.values)
    left = sol.solve(combo, warm_start=False).values
    right = (a * sol.solve(f, warm_start=False).values
             + b * sol.solve(h, warm_start=False).values)
    scale = np.max(np.abs(left)) + np.max(np.abs(right))
    assert np.max(np.abs(left - right)) <= 1e-9 * scale


def test_mean_projection_recorded():
    g = Grid.line(10.0, 64)
    sol = PoissonSolver(g)
    f = ScalarField.constant(g, 1.0)
    vals = f.values.copy()
    vals[0] += 64.0  # mean 2.0 before projection
    out = sol.solve(ScalarField(g, vals))
    assert sol.last_projected_mean == pytest.approx(2.0, rel=1e-12)
    assert abs(mean(out)) <= 1e-12


def test_no_convergence_raises():
    g = Grid.line(10.0, 128)
    sol = PoissonSolver(g, max_iterations=2)
    f = _random_zero_mean(g, 4)
    with pytest.raises(NoConvergence) as err:
        sol.solve(f)
    assert err.value.iterations == 2
    assert err.value.residual > 0.0


def test_warm_start_consistency():
    g = Grid.line(10.0, 64)
    sol = PoissonSolver(g)
    f = _random_zero_mean(g, 8)
    first = sol.solve(f).values.copy()
    again = sol.solve(f).values  # warm start from the exact answer
    assert np.allclose(first, again, rtol=0, atol=1e-11 * np.max(np.abs(first)))
    assert sol.last_iterations <= 2


def test_2d_eigenfunction():
    g = Grid.rectangle((4.0, 3.0), (32, 24))
    X, Y = g.meshes()
    qx, qy = math.pi / 4.0, 2.0 * math.pi / 3.0
    f = ScalarField(g, np.cos(qx * X) * np.cos(qy * Y))
    sol = PoissonSolver(g)
    kf = sol.solve(f)
    target = f.values / (qx**2 + qy**2)
    err = np.max(np.abs(kf.values - target))
    assert err <= 5e-3  # h^2 discretization error at this resolution
    resid = neg_laplacian(g, kf.values) - f.values
    assert np.linalg.norm(resid) <= 1e-9 * np.linalg.norm(f.values)


def test_solve_k_alias():
    g = Grid.line(10.0, 64)
    f = _random_zero_mean(g, 3)
    via_alias = solve_k(PoissonSolver(g), f).values
    direct = PoissonSolver(g).solve(f).values
    assert np.array_equal(via_alias, direct)  # identical cold-start iterates
