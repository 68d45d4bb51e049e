import math

import numpy as np
import pytest
from hypothesis import given, seed, settings
from hypothesis import strategies as st

from chemolab.errors import DomainError, NonIntegrable, SingularEvaluation
from chemolab.motility import (
    MotilityModel,
    admissible_exponents,
    analyze,
    critical_family,
    excitability,
    excitable_set,
    gamma,
    in_excitable_set,
    is_monotone,
    is_strictly_monotone,
    kappa_witness,
    phi,
    phi_gamma,
    phi_gamma_prime,
    psi,
    psi_values,
)

FD_RTOL = 1e-6
PSI_RTOL = 5e-11

# reference integrals of t^m (a + b (t+s0)^-k) computed with
# scipy.integrate.quad at epsrel 1e-13 and frozen
PSI_ORACLE = [
    (dict(m=1.0, a=0.0, b=1.0, k=2.0, s0=1.0), 0.5, 0.07213177477483104),
    (dict(m=1.0, a=0.0, b=1.0, k=2.0, s0=1.0), 3.0, 0.6362943611198906),
    (dict(m=1.0, a=0.0, b=1.0, k=2.0, s0=1.0), 10.0, 1.4888043637074615),
    (dict(m=2.0, a=0.5, b=2.0, k=1.0, s0=0.5), 1.0, 0.7159728110007214),
    (dict(m=2.0, a=0.5, b=2.0, k=1.0, s0=0.5), 4.0, 23.765278955334775),
    (dict(m=0.5, a=0.0, b=1.0, k=0.75, s0=0.0), 2.0, 2.2423904406765716),
    (dict(m=2.5, a=1.0, b=3.0, k=4.0, s0=2.0), 0.2, 0.001164643770589847),
    (dict(m=2.5, a=1.0, b=3.0, k=4.0, s0=2.0), 6.0, 151.5235322732711),
]

model_strategy = st.builds(
    MotilityModel,
    m=st.floats(0.1, 4.0),
    a=st.one_of(st.just(0.0), st.floats(0.0, 2.0)),
    b=st.floats(0.2, 5.0),
    k=st.floats(0.1, 4.0),
    s0=st.one_of(st.just(0.0), st.floats(0.0, 3.0)),
)


def test_parameter_validation():
    with pytest.raises(DomainError):
        MotilityModel(m=0.0, a=0.0, b=1.0, k=1.0, s0=1.0)
    with pytest.raises(DomainError):
        MotilityModel(m=1.0, a=-0.1, b=1.0, k=1.0, s0=1.0)
    with pytest.raises(DomainError):
        MotilityModel(m=1.0, a=0.0, b=0.0, k=1.0, s0=1.0)
    with pytest.raises(DomainError):
        MotilityModel(m=1.0, a=0.0, b=1.0, k=0.0, s0=1.0)
    with pytest.raises(DomainError):
        MotilityModel(m=1.0, a=0.0, b=1.0, k=1.0, s0=-1.0)


def test_phi_gamma_pointwise():
    model = MotilityModel(m=2.0, a=0.5, b=2.0, k=3.0, s0=1.0)
    assert phi(model, 2.0) == 4.0
    assert gamma(model, 1.0) == 0.5 + 2.0 / 8.0
    assert phi_gamma(model, 1.0) == pytest.approx(gamma(model, 1.0), rel=1e-15)
    vals = phi(model, np.array([1.0, 2.0, 3.0]))
    assert vals.shape == (3,)
    assert vals[2] == 9.0


def test_gamma_singular_at_zero_shift():
    model = MotilityModel(m=1.0, a=0.0, b=1.0, k=2.0, s0=0.0)
    with pytest.raises(SingularEvaluation):
        gamma(model, 0.0)
    with pytest.raises(DomainError):
        gamma(model, -0.5)


def test_product_limit_at_zero():
    # s0 = 0: the product s^m /s^k has a finite limit only for m >= k
    diffusive = MotilityModel(m=2.0, a=0.0, b=3.0, k=1.0, s0=0.0)
    assert phi_gamma(diffusive, 0.0) == 0.0
    balanced = MotilityModel(m=2.0, a=0.0, b=3.0, k=2.0, s0=0.0)
    assert phi_gamma(balanced, 0.0) == 3.0
    singular = MotilityModel(m=1.0, a=0.0, b=3.0, k=2.0, s0=0.0)
    with pytest.raises(SingularEvaluation):
        phi_gamma(singular, 0.0)


@seed(20240817)
@settings(max_examples=200, deadline=None)
@given(model=model_strategy, s=st.floats(1e-3, 1e3))
def test_product_derivative_matches_finite_difference(model, s):
    # centered difference of phi*gamma with a cube-root-of-eps step
    rel = 6e-6
    lo, hi = s * (1.0 - rel), s * (1.0 + rel)
    fd = (phi_gamma(model, hi) - phi_gamma(model, lo)) / (hi - lo)
    exact = phi_gamma_prime(model, s)
    scale = abs(exact) + abs(phi_gamma(model, s) / s) + 1e-30
    assert abs(fd - exact) <= FD_RTOL * scale


@seed(20240817)
@settings(max_examples=200, deadline=None)
@given(model=model_strategy)
def test_monotone_criterion_matches_scan(model):
    s = np.geomspace(1e-8, 1e6, 2048)
    if model.a > 0.0 and model.m < model.k:
        # interior minimizer of the derivative bracket; appending it makes
        # the scan catch arbitrarily narrow sign dips
        sstar = (model.b * (model.k - model.m)
                 / (model.a * model.m * (model.k + 1.0))) ** (1.0 / model.k) - model.s0
        if sstar > 0.0 and np.isfinite(sstar):
            s = np.append(s, sstar)
    scan_min = float(np.min(phi_gamma_prime(model, s)))
    if is_monotone(model):
        assert scan_min >= -1e-10 * max(1.0, abs(scan_min))
    else:
        assert scan_min < 0.0


@seed(20240817)
@settings(max_examples=150, deadline=None)
@given(model=model_strategy)
def test_empty_excitable_set_implies_monotone(model):
    intervals = excitable_set(model, np.geomspace(1e-6, 1e5, 1024))
    if not intervals:
        assert is_monotone(model)


def test_excitable_set_known_interval():
    # margin 2s/(s+1) - 1 crosses zero at s=1 and stays positive beyond
    model = MotilityModel(m=1.0, a=0.0, b=1.0, k=2.0, s0=1.0)
    assert not is_monotone(model)
    grid = np.geomspace(1e-4, 1e4, 4096)
    intervals = excitable_set(model, grid)
    assert len(intervals) == 1
    lo, hi = intervals[0]
    assert abs(lo - 1.0) <= 1e-9
    assert hi == pytest.approx(grid[-1], rel=1e-12)
    assert in_excitable_set(model, 2.0)
    assert not in_excitable_set(model, 0.5)
    assert excitability(model, 1.0) == pytest.approx(0.0, abs=1e-14)


def test_monotone_model_has_empty_excitable_set():
    model = MotilityModel(m=2.0, a=0.0, b=1.0, k=1.0, s0=1.0)
    assert is_monotone(model)
    assert excitable_set(model, np.geomspace(1e-6, 1e6, 4096)) == []


@pytest.mark.parametrize("params,s,expected", PSI_ORACLE)
def test_psi_against_quadrature_oracle(params, s, expected):
    model = MotilityModel(**params)
    assert psi(model, s) == pytest.approx(expected, rel=PSI_RTOL)
    batch = psi_values(model, np.array([s]))
    assert batch[0] == pytest.approx(expected, rel=1e-9)


def test_psi_batch_matches_scalar():
    model = MotilityModel(m=0.7, a=0.3, b=1.5, k=2.2, s0=0.4)
    pts = np.geomspace(1e-6, 50.0, 64)
    batch = psi_values(model, pts)
    scalars = np.array([psi(model, float(p)) for p in pts])
    assert np.allclose(batch, scalars, rtol=1e-9, atol=1e-300)


def test_psi_zero_and_monotone():
    model = MotilityModel(m=1.0, a=0.0, b=1.0, k=2.0, s0=1.0)
    assert psi(model, 0.0) == 0.0
    pts = np.linspace(0.0, 8.0, 160)
    vals = psi_values(model, pts)
    assert np.all(np.diff(vals) >= 0.0)


def test_psi_nonintegrable():
    model = MotilityModel(m=1.0, a=0.0, b=1.0, k=2.0, s0=0.0)
    with pytest.raises(NonIntegrable):
        psi(model, 1.0)
    with pytest.raises(NonIntegrable):
        psi_values(model, np.array([0.5]))


def test_psi_closed_form_shift_free():
    #   integral of a t^m + b t^(m-k) for s0=0, m-k > -1
    model = MotilityModel(m=1.5, a=0.5, b=2.0, k=1.0, s0=0.0)
    s = 3.0
    expected = 0.5 * s ** 2.5 / 2.5 + 2.0 * s ** 1.5 / 1.5
    assert psi(model, s) == pytest.approx(expected, rel=1e-13)


def test_scaling_lower_bound_of_phi():
    # phi(lam*s) = lam^m phi(s) exactly for the power law
    model = MotilityModel(m=1.7, a=0.1, b=1.0, k=2.0, s0=1.0)
    for lam in (0.25, 0.5, 2.0, 7.5):
        for s in (0.3, 1.0, 4.0):
            assert phi(model, lam * s) == pytest.approx(
                lam ** model.m * phi(model, s), rel=1e-13
            )


def test_critical_family_tangency():
    a_over_b, s1 = critical_family(k=2.0, m=0.5, s0=1.0)
    assert a_over_b == pytest.approx(0.25, rel=1e-14)
    assert s1 == pytest.approx(1.0, rel=1e-14)
    model = MotilityModel(m=0.5, a=0.25, b=1.0, k=2.0, s0=1.0)
    assert abs(phi_gamma_prime(model, s1)) <= 1e-9
    assert is_monotone(model)
    assert not is_strictly_monotone(model)
    assert excitable_set(model, np.geomspace(1e-6, 1e4, 2048)) == []


def test_critical_family_domain():
    with pytest.raises(DomainError):
        critical_family(k=2.0, m=1.5, s0=1.0)
    with pytest.raises(DomainError):
        critical_family(k=2.0, m=0.5, s0=0.0)


def test_admissible_exponents():
    # m >= 1 keeps (alpha, theta) = (m, 0); p stays below 2 by an explicit gap
    p, q = admissible_exponents(MotilityModel(m=2.0, a=0.0, b=1.0, k=1.0, s0=1.0))
    assert p == pytest.approx(2.0 - 1e-12, abs=1e-15)
    assert q == 2.0
    p, q = admissible_exponents(MotilityModel(m=3.0, a=0.0, b=1.0, k=1.0, s0=1.0))
    assert q == 3.0
    p, q = admissible_exponents(MotilityModel(m=0.5, a=0.05, b=1.0, k=2.0, s0=2.0))
    assert p == 1.0
    assert q == 2.0


def test_kappa_witness_finite():
    model = MotilityModel(m=1.0, a=0.0, b=1.0, k=2.0, s0=1.0)
    kap = kappa_witness(model, 1e4)
    assert math.isfinite(kap) and kap > 0.0
    # the ratio it bounds is attained somewhere in the sampled range
    pts = np.geomspace(1e-4, 1e4, 512)
    ratios = phi_gamma(model, pts) / (1.0 + psi_values(model, pts))
    assert kap >= np.max(ratios) * (1.0 - 1e-12)


def test_analyze_roundtrip():
    model = MotilityModel(m=0.5, a=0.05, b=1.0, k=2.0, s0=2.0)
    report = analyze(model)
    d = report.to_dict()
    assert d["monotone"] == is_monotone(model)
    assert d["excitable_intervals"]
    assert d["p_max"] == 1.0
    assert "kappa" in d


def test_strictness_edge_cases():
    # m = k with a shift: strictly increasing product
    assert is_strictly_monotone(MotilityModel(m=1.0, a=0.0, b=1.0, k=1.0, s0=1.0))
    # m = k, no shift, no baseline: constant product
    assert not is_strictly_monotone(MotilityModel(m=1.0, a=0.0, b=1.0, k=1.0, s0=0.0))
    assert is_monotone(MotilityModel(m=1.0, a=0.0, b=1.0, k=1.0, s0=0.0))
    assert is_strictly_monotone(MotilityModel(m=2.0, a=0.0, b=1.0, k=1.0, s0=0.0))
