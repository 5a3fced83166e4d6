"""Pathwise simulation and verification toolkit for fractional jump processes.

Builds two-sided compensated Poisson drivers, their fractional
moving-average transforms (long-memory paths with parameter d in
(0, 1/2)), mean-reverting Langevin solutions driven by them, and
closed-form solutions of nonlinear SDEs via monotone state-space
transforms, together with the analytic second-order theory and Monte
Carlo machinery to verify all of it.
"""

import os as _os

# FLEVY_THREADS caps worker parallelism of the numeric backends; it must
# be applied before the first numpy import to take effect.
if "FLEVY_THREADS" in _os.environ:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _os.environ["FLEVY_THREADS"])

from .drivers import (
    LevyDriverSpec,
    derive_replicate_seed,
    psi_L,
    sample_two_sided_levy,
    second_moment,
)
from .ensembles import (
    EnsembleConfig,
    EnsembleStats,
    compare_covariance,
    lrd_slope,
    long_time_ratio,
    run_ensemble,
    symmetry_test,
)
from .errors import ConfigError, FlevyError, GridMismatchError, GridSizeError, NumericalError
from .floup import (
    FloupParams,
    choose_past_cutoff,
    cov_rs_integrals,
    euler_langevin,
    floup_autocov_asymptotic,
    floup_via_ibp,
    gripenberg_norros,
    gripenberg_norros_quadrature,
    ou_operator,
)
from .fractional import (
    FlpParams,
    floup_characteristic_function,
    floup_driver_kernel,
    flp_covariance,
    flp_kernel,
    riemann_liouville_minus,
    simulate_flp,
)
from .paths import GridFunction, SamplePath
from .refinement import coupled_flp_family
from .transforms import (
    ProperTriple,
    SdeCoefficients,
    SolutionReport,
    catalog,
    residual_check,
    solve_sde,
    squared_floup,
    squared_floup_sde_forms,
    sst_from_psi,
    validate_strongly_proper,
)
from .young import (
    chain_rule_residual,
    cumulative_rs_integral,
    p_variation,
    p_variation_brute_force,
    rs_integral,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "EnsembleConfig",
    "EnsembleStats",
    "FlevyError",
    "FloupParams",
    "FlpParams",
    "GridFunction",
    "GridMismatchError",
    "GridSizeError",
    "LevyDriverSpec",
    "NumericalError",
    "ProperTriple",
    "SamplePath",
    "SdeCoefficients",
    "SolutionReport",
    "catalog",
    "chain_rule_residual",
    "choose_past_cutoff",
    "compare_covariance",
    "coupled_flp_family",
    "cov_rs_integrals",
    "cumulative_rs_integral",
    "derive_replicate_seed",
    "euler_langevin",
    "floup_autocov_asymptotic",
    "floup_characteristic_function",
    "floup_driver_kernel",
    "floup_via_ibp",
    "flp_covariance",
    "flp_kernel",
    "gripenberg_norros",
    "gripenberg_norros_quadrature",
    "long_time_ratio",
    "lrd_slope",
    "ou_operator",
    "p_variation",
    "p_variation_brute_force",
    "psi_L",
    "residual_check",
    "riemann_liouville_minus",
    "rs_integral",
    "run_ensemble",
    "sample_two_sided_levy",
    "second_moment",
    "simulate_flp",
    "solve_sde",
    "squared_floup",
    "squared_floup_sde_forms",
    "sst_from_psi",
    "symmetry_test",
    "validate_strongly_proper",
]
