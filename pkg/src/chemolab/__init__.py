"""Numerical laboratory for a quasilinear local-sensing chemotaxis system.

The package simulates the coupled density/concentration dynamics with a
density-dependent motility product, tracks the associated energy and
dissipation functionals along trajectories, and classifies parameter sets
by monotonicity and excitability.
"""

from .errors import (
    ChemolabError,
    ConfigError,
    DomainError,
    NoConvergence,
    NonIntegrable,
    PositivityFailure,
    SingularEvaluation,
    SingularMotility,
)
from .field import Grid, ScalarField, grad_sq_norm, load_field_csv, lp_norm, mean, save_field_csv
from .motility import (
    MotilityAnalysis,
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
from .poisson import PoissonSolver, neg_laplacian, solve_k, solve_k_direct_1d
from .solver import (
    RunResult,
    SimState,
    SolverConfig,
    dispersion_curve,
    linear_growth_rate,
    new_state,
    run,
    step,
)
from .diagnostics import (
    CSV_COLUMNS,
    DiagnosticsRecord,
    DiagnosticsSampler,
    b02_residual,
    convergence_metrics,
    dissipation,
    duality_check,
    int_d0_bound_ok,
    l0_monotone_ok,
    liapunov,
    pattern_flag,
    potentials,
)
from .harness import (
    PRESETS,
    ScenarioConfig,
    SweepSpec,
    build_initial,
    load_scenario,
    load_sweep,
    run_scenario,
    run_sweep,
)
from .kernels import available_engines, get_engine

__version__ = "0.1.0"

__all__ = [
    "ChemolabError", "ConfigError", "DomainError", "NoConvergence",
    "NonIntegrable", "PositivityFailure", "SingularEvaluation", "SingularMotility",
    "Grid", "ScalarField", "grad_sq_norm", "load_field_csv", "lp_norm",
    "mean", "save_field_csv",
    "MotilityAnalysis", "MotilityModel", "admissible_exponents", "analyze",
    "critical_family", "excitability", "excitable_set", "gamma",
    "in_excitable_set", "is_monotone", "is_strictly_monotone", "kappa_witness",
    "phi", "phi_gamma", "phi_gamma_prime", "psi", "psi_values",
    "PoissonSolver", "neg_laplacian", "solve_k", "solve_k_direct_1d",
    "RunResult", "SimState", "SolverConfig", "dispersion_curve",
    "linear_growth_rate", "new_state", "run", "step",
    "CSV_COLUMNS", "DiagnosticsRecord", "DiagnosticsSampler", "b02_residual",
    "convergence_metrics", "dissipation", "duality_check", "int_d0_bound_ok",
    "l0_monotone_ok", "liapunov", "pattern_flag", "potentials",
    "PRESETS", "ScenarioConfig", "SweepSpec", "build_initial", "load_scenario",
    "load_sweep", "run_scenario", "run_sweep",
    "available_engines", "get_engine",
    "__version__",
]
