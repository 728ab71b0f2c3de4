"""Numerical laboratory for one-dimensional jump SDEs with non-Lipschitz,
super-linear coefficients.

The package splits into model building blocks (`model`), reproducible noise
(`noise`), path integration (`integrator`), inequality analysis
(`analysis`), condition checking (`verifier`), Monte Carlo experiments
(`harness`), and a config-driven CLI (`cli`, `config`, `exprs`).
"""

from .analysis import (OmegaTransform, PsiFamily, a_sequence, bihari_bound,
                       implied_state_bound, moment_bound,
                       nonconfluence_constants, omega_build, p_alpha,
                       phi_growth, phi_inverse, psi_build, r_inequality_check,
                       reciprocal_mass, w_integral)
from .config import parse_config, resolve_seed
from .errors import (AssumptionViolationError, CatalogError, ConfigError,
                     DomainError, ExpressionError, NumericalDomainError,
                     ResourceLimitError, TransformRangeError, UsageError)
from .exprs import Expression, parse_expression, parse_scalar
from .harness import (DEFAULT_SEED, ExperimentConfig, ExperimentSummary,
                      run_convergence, run_experiment, run_explosion,
                      run_nonconfluence, run_uniqueness)
from .integrator import (TAMING_MODES, PathResult, SchemeConfig,
                         dump_path_csv, first_exit_time, ito_levy_apply,
                         simulate)
from .model import (GAMMA, GROWTH_CATALOG, MODULUS_CATALOG, Band,
                    CoefficientSet, GrowthFunction, MarkMeasure, Modulus,
                    affine_modulus, builtin_growth, builtin_modulus, lebesgue,
                    preset, scale_modulus)
from .noise import (JumpEvent, NoiseRealization, derive_path_seed,
                    sample_noise, split_large_jumps, truncate_small_jumps)
from .verifier import (NO_VIOLATION, VIOLATED, AssumptionReport,
                       ConditionResult, check_corollary_conditions,
                       check_growth, check_local_conditions, check_modulus,
                       check_nonconfluence_conditions, designated_checks,
                       format_report_table, growth_ratio_supremum,
                       reports_to_json)

__version__ = "0.1.0"

__all__ = [
    "AssumptionReport", "AssumptionViolationError", "Band", "CatalogError",
    "CoefficientSet", "ConditionResult", "ConfigError", "DEFAULT_SEED",
    "DomainError", "ExperimentConfig", "ExperimentSummary", "Expression",
    "ExpressionError", "GAMMA", "GROWTH_CATALOG", "GrowthFunction",
    "JumpEvent", "MODULUS_CATALOG", "MarkMeasure", "Modulus",
    "NO_VIOLATION", "NoiseRealization", "NumericalDomainError",
    "OmegaTransform", "PathResult", "PsiFamily", "ResourceLimitError",
    "SchemeConfig", "TAMING_MODES", "TransformRangeError", "UsageError",
    "VIOLATED", "a_sequence", "affine_modulus", "bihari_bound",
    "builtin_growth", "builtin_modulus", "check_corollary_conditions",
    "check_growth", "check_local_conditions", "check_modulus",
    "check_nonconfluence_conditions", "derive_path_seed",
    "designated_checks", "dump_path_csv", "first_exit_time",
    "format_report_table", "growth_ratio_supremum", "implied_state_bound",
    "ito_levy_apply", "lebesgue", "moment_bound", "nonconfluence_constants",
    "omega_build", "p_alpha", "parse_config", "parse_expression",
    "parse_scalar", "phi_growth", "phi_inverse", "preset", "psi_build",
    "r_inequality_check", "reciprocal_mass", "reports_to_json",
    "resolve_seed", "run_convergence", "run_experiment", "run_explosion",
    "run_nonconfluence", "run_uniqueness", "sample_noise", "scale_modulus",
    "simulate", "split_large_jumps", "truncate_small_jumps", "w_integral",
]
