"""Cone geometry, transfer-operator spectra, rate functions, and tilted
sampling for products of positive random matrices."""

from .ensemble import (
    ConditionReport,
    FiniteEnsemble,
    ScalarReference,
    build_finite,
    check_conditions,
    ensemble_from_dict,
    ensemble_hash,
    ensemble_to_dict,
    load_ensemble,
    sample_matrix,
    scalar_reference,
)
from .geometry import (
    PositiveMatrix,
    SimplexPoint,
    barycenter,
    cocycle_log_norm,
    hilbert_distance,
    kesten_ratio,
    log_N,
    matrix_norm,
    project_action,
    simplex_point,
    spectral_radius_cw,
)
from .grid import SimplexGrid, build_grid
from .harness import ComparisonReport, RunConfig, emit_report, parse_config
from .ratefn import (
    CumulantTable,
    cramer_series,
    cumulants,
    lambda_curve,
    legendre,
    lyapunov_exponent,
)
from .sampler import (
    DriftEstimates,
    PathObservables,
    TiltedBatch,
    characteristic_decay_diagnostic,
    estimate_drifts,
    is_probability,
    simulate_paths,
    tilted_simulate,
)
from .spectral import (
    SpectralSolution,
    apply_Ps,
    coefficient_eigendata,
    markov_kernel_qs,
    perturbed_eigenvalue_check,
    solve_spectral,
    stationary_pi,
)
from .streams import RandomStream

__version__ = "0.1.0"

__all__ = [
    "ComparisonReport",
    "ConditionReport",
    "CumulantTable",
    "DriftEstimates",
    "FiniteEnsemble",
    "PathObservables",
    "PositiveMatrix",
    "RandomStream",
    "RunConfig",
    "ScalarReference",
    "SimplexGrid",
    "SimplexPoint",
    "SpectralSolution",
    "TiltedBatch",
    "apply_Ps",
    "barycenter",
    "build_finite",
    "build_grid",
    "characteristic_decay_diagnostic",
    "check_conditions",
    "cocycle_log_norm",
    "coefficient_eigendata",
    "cramer_series",
    "cumulants",
    "emit_report",
    "ensemble_from_dict",
    "ensemble_hash",
    "ensemble_to_dict",
    "estimate_drifts",
    "hilbert_distance",
    "is_probability",
    "kesten_ratio",
    "lambda_curve",
    "legendre",
    "load_ensemble",
    "log_N",
    "lyapunov_exponent",
    "markov_kernel_qs",
    "matrix_norm",
    "parse_config",
    "perturbed_eigenvalue_check",
    "project_action",
    "sample_matrix",
    "scalar_reference",
    "simplex_point",
    "simulate_paths",
    "solve_spectral",
    "spectral_radius_cw",
    "stationary_pi",
    "tilted_simulate",
]
