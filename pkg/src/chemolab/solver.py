"""Time integration of the coupled system.

The density u obeys du/dt = lap(phi(u) gamma(v)) and the concentration v
obeys dv/dt = lap(v) - v + u, both with no-flux boundaries.  Stepping is
delegated to a kernel engine; this module owns validation, sampling, the
single-step functional API, and the linear growth-rate analysis of the
homogeneous state.
"""

from __future__ import annotations

import math
import time as _time
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from . import kernels
from .errors import DomainError, PositivityFailure, SingularMotility
from .field import Grid, ScalarField, mean
from .motility import MotilityModel, gamma, gamma_prime

__all__ = [
    "SolverConfig",
    "SimState",
    "new_state",
    "step",
    "run",
    "RunResult",
    "linear_growth_rate",
    "dispersion_curve",
]

_V_SCHEMES = ("semi_implicit", "explicit")


@dataclass
class SolverConfig:
    """Stepping policy: stability margin, step ceiling, horizon, scheme."""

    cfl_safety: float = 0.45
    dt_max: float = 0.05
    t_end: float = 1.0
    v_scheme: str = "semi_implicit"
    positivity_retries: int = 40

    def __post_init__(self):
        if not (0.0 < self.cfl_safety <= 1.0):
            raise DomainError(f"cfl_safety must be in (0, 1], got {self.cfl_safety}")
        if self.dt_max <= 0.0:
            raise DomainError(f"dt_max must be positive, got {self.dt_max}")
        if self.t_end < 0.0:
            raise DomainError(f"t_end must be nonnegative, got {self.t_end}")
        if self.v_scheme not in _V_SCHEMES:
            raise DomainError(f"v_scheme must be one of {_V_SCHEMES}, got {self.v_scheme!r}")
        if self.positivity_retries < 0:
            raise DomainError("positivity_retries must be nonnegative")


@dataclass
class SimState:
    """Trajectory point: time, fields, last step size, step counter.

    comp is the per-cell compensation ledger of the density update; it
    travels with the state so that restarting from a state preserves the
    exact-mass property.
    """

    t: float
    u: ScalarField
    v: ScalarField
    dt: float = 0.0
    step_count: int = 0
    comp: np.ndarray = None

    def __post_init__(self):
        if self.u.grid != self.v.grid:
            raise DomainError("u and v must live on the same grid")
        if self.comp is None:
            self.comp = np.zeros_like(self.u.values)


def new_state(u0: ScalarField, v0: ScalarField) -> SimState:
    if np.any(u0.values < 0.0) or np.any(v0.values < 0.0):
        raise DomainError("initial fields must be nonnegative")
    return SimState(t=0.0, u=u0.copy(), v=v0.copy())


def _engine_args(model: MotilityModel, config: SolverConfig):
    return (
        model.m, model.a, model.b, model.k, model.s0,
        config.cfl_safety, config.dt_max, config.positivity_retries,
        config.v_scheme == "semi_implicit",
    )


def _raise_for_status(status, t):
    if status == kernels.pure.STATUS_POSITIVITY:
        raise PositivityFailure(f"could not keep fields nonnegative at t={t:.6g}")
    if status == kernels.pure.STATUS_SINGULAR:
        raise SingularMotility(
            f"concentration touched zero with s0 = 0 at t={t:.6g}"
        )


def step(state: SimState, model: MotilityModel, config: SolverConfig) -> SimState:
    """Advance one accepted step (numpy path) and return the new state."""
    u = state.u.values.copy()
    v = state.v.values.copy()
    comp = state.comp.copy()
    dt, status = kernels.pure.single_step(
        u, v, comp, state.u.grid.h, *_engine_args(model, config)
    )
    _raise_for_status(status, state.t)
    return SimState(
        t=state.t + dt,
        u=ScalarField(state.u.grid, u),
        v=ScalarField(state.v.grid, v),
        dt=dt,
        step_count=state.step_count + 1,
        comp=comp,
    )


@dataclass
class RunResult:
    state: SimState
    records: list = dataclass_field(default_factory=list)
    trace: list = dataclass_field(default_factory=list)
    int_D0: float = 0.0
    int_D1: float = 0.0
    engine: str = "pure"
    steps: int = 0
    runtime_s: float = 0.0


def _sample_times(t_end: float, interval: float) -> list[float]:
    if t_end <= 0.0:
        return [0.0]
    if not interval or interval <= 0.0:
        return [0.0, t_end]
    n = int(math.floor(t_end / interval + 1e-9))
    times = [i * interval for i in range(n + 1)]
    if times[-1] < t_end - 1e-9 * max(1.0, t_end):
        times.append(t_end)
    else:
        times[-1] = t_end
    return times


def run(
    u0: ScalarField,
    v0: ScalarField,
    model: MotilityModel,
    config: SolverConfig,
    sampler=None,
    trace_interval: float | None = None,
    engine: str = "auto",
) -> RunResult:
    """Advance from (u0, v0) to t_end, sampling along the way.

    With a sampler, its observe(t, u, v, dt) hook runs at every sample time
    and the cumulative dissipation integrals are taken from it.  Without
    one, trace_interval > 0 collects a light (t, mean_u, mean_v) trace.
    """
    grid = u0.grid
    if v0.grid != grid:
        raise DomainError("u0 and v0 must share a grid")
    if np.any(u0.values < 0.0) or np.any(v0.values < 0.0):
        raise DomainError("initial fields must be nonnegative")
    if mean(u0) <= 0.0:
        raise DomainError("initial density must have positive mean")

    eng = kernels.get_engine(engine, grid.dim)
    u = u0.values.copy()
    v = v0.values.copy()
    comp = np.zeros_like(u)
    args = _engine_args(model, config)

    interval = sampler.interval if sampler is not None else trace_interval
    times = _sample_times(config.t_end, interval)

    result = RunResult(state=None, engine=eng.ENGINE_NAME)
    t0 = _time.perf_counter()
    t = 0.0
    dt_last = 0.0

    def observe():
        if sampler is not None:
            sampler.observe(t, u, v, dt_last)
        elif trace_interval is not None:
            uf = ScalarField(grid, u)
            vf = ScalarField(grid, v)
            result.trace.append((t, mean(uf), mean(vf)))

    observe()
    for target in times[1:]:
        t, steps, dt_last, status = eng.advance_to(u, v, comp, t, target, grid.h, *args)
        result.steps += steps
        _raise_for_status(status, t)
        observe()

    result.runtime_s = _time.perf_counter() - t0
    result.state = SimState(
        t=t,
        u=ScalarField(grid, u),
        v=ScalarField(grid, v),
        dt=dt_last,
        step_count=result.steps,
        comp=comp,
    )
    if sampler is not None:
        result.records = sampler.records
        result.int_D0 = sampler.int_D0
        result.int_D1 = sampler.int_D1
    return result


def linear_growth_rate(model: MotilityModel, M: float, q: float) -> float:
    """Largest real eigenvalue part of the homogeneous-state linearization
    at wavenumber q.

    The 2x2 system couples the density mode (top row) to the concentration
    mode; q = 0 returns exactly 0 (the conserved-mass neutral mode).
    """
    if M <= 0.0:
        raise DomainError("M must be positive")
    q2 = q * q
    g = gamma(model, M)
    gp = gamma_prime(model, M)
    f = M ** model.m
    fp = model.m * M ** (model.m - 1.0)
    a11 = -q2 * fp * g
    a12 = -q2 * f * gp
    a21 = 1.0
    a22 = -q2 - 1.0
    tr = a11 + a22
    det = a11 * a22 - a12 * a21
    disc = tr * tr - 4.0 * det
    if disc >= 0.0:
        return 0.5 * (tr + math.sqrt(disc))
    return 0.5 * tr


def dispersion_curve(model: MotilityModel, M: float, qs) -> np.ndarray:
    return np.array([linear_growth_rate(model, M, float(q)) for q in np.asarray(qs).ravel()])
