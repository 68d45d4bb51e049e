"""Engine selection and cross-engine agreement."""

import numpy as np
import pytest

import chemolab as cl
from chemolab import kernels
from chemolab.errors import ConfigError

HAS_COMPILED = kernels.compiled is not None

MODEL = cl.MotilityModel(m=2.0, a=0.0, b=1.0, k=1.0, s0=1.0)


def test_available_engines_lists_pure():
    names = kernels.available_engines()
    assert "pure" in names
    if HAS_COMPILED:
        assert "compiled" in names


def test_get_engine_pure_by_name():
    assert kernels.get_engine("pure", 1) is kernels.pure
    assert kernels.get_engine("pure", 2) is kernels.pure


def test_get_engine_unknown_name():
    with pytest.raises(ConfigError):
        kernels.get_engine("fortran", 1)


def test_status_constants_are_distinct():
    codes = {
        kernels.pure.STATUS_OK,
        kernels.pure.STATUS_POSITIVITY,
        kernels.pure.STATUS_SINGULAR,
    }
    assert len(codes) == 3
    assert kernels.pure.STATUS_OK == 0


@pytest.mark.skipif(not HAS_COMPILED, reason="extension not built")
def test_compiled_status_codes_match_pure():
    assert kernels.compiled.STATUS_OK == kernels.pure.STATUS_OK
    assert kernels.compiled.STATUS_POSITIVITY == kernels.pure.STATUS_POSITIVITY
    assert kernels.compiled.STATUS_SINGULAR == kernels.pure.STATUS_SINGULAR


@pytest.mark.skipif(not HAS_COMPILED, reason="extension not built")
def test_compiled_rejects_2d():
    with pytest.raises(ConfigError):
        kernels.get_engine("compiled", 2)


@pytest.mark.skipif(not HAS_COMPILED, reason="extension not built")
def test_auto_prefers_compiled_in_1d(monkeypatch):
    monkeypatch.delenv("CHEMOLAB_ENGINE", raising=False)
    assert kernels.get_engine("auto", 1) is kernels.compiled
    assert kernels.get_engine("auto", 2) is kernels.pure


def test_env_override_wins(monkeypatch):
    monkeypatch.setenv("CHEMOLAB_ENGINE", "pure")
    assert kernels.get_engine("auto", 1) is kernels.pure
    monkeypatch.setenv("CHEMOLAB_ENGINE", "bogus")
    with pytest.raises(ConfigError):
        kernels.get_engine("auto", 1)


def test_explicit_name_ignores_env(monkeypatch):
    monkeypatch.setenv("CHEMOLAB_ENGINE", "pure")
    if HAS_COMPILED:
        assert kernels.get_engine("compiled", 1) is kernels.compiled


@pytest.mark.skipif(not HAS_COMPILED, reason="extension not built")
@pytest.mark.parametrize("scheme", ["semi_implicit", "explicit"])
def test_engines_agree_over_short_horizon(line_grid, scheme):
    x = line_grid.centers()
    L = line_grid.extents[0]
    u0 = cl.ScalarField(line_grid, 1.0 + 0.01 * np.cos(np.pi * x / L))
    v0 = cl.ScalarField(line_grid, np.full(line_grid.cells, 1.0))
    cfg = cl.SolverConfig(t_end=0.5, dt_max=2e-3, v_scheme=scheme)
    out = {}
    for name in ("pure", "compiled"):
        res = cl.run(u0, v0, MODEL, cfg, engine=name)
        out[name] = res
        assert res.engine == name
    assert out["pure"].steps == out["compiled"].steps
    # identical step-size sequence, so only rounding noise may differ
    for fieldname in ("u", "v"):
        a = getattr(out["pure"].state, fieldname).values
        b = getattr(out["compiled"].state, fieldname).values
        assert np.max(np.abs(a - b)) <= 1e-9 * np.max(np.abs(a))


@pytest.mark.skipif(not HAS_COMPILED, reason="extension not built")
def test_compiled_singular_status():
    g = cl.Grid.line(1.0, 8)
    u = np.full(8, 1.0)
    v = np.full(8, 1.0)
    v[3] = 0.0
    comp = np.zeros(8)
    model = cl.MotilityModel(m=1.0, a=0.0, b=1.0, k=2.0, s0=0.0)
    t, steps, dt, status = kernels.compiled.advance_to(
        u, v, comp, 0.0, 1e-3, g.h, model.m, model.a, model.b, model.k, model.s0,
        0.45, 1e-3, 4, True,
    )
    assert status == kernels.compiled.STATUS_SINGULAR


def test_pure_supports_both_dims():
    assert 1 in kernels.pure.SUPPORTED_DIMS
    assert 2 in kernels.pure.SUPPORTED_DIMS
