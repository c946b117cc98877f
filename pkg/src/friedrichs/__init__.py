"""Thresholds and bound states of rank-one perturbed dispersion models on T^3."""

from .critical import (
    ClosedFormCheck,
    CriticalPointInfo,
    closed_form_check,
    find_maximizer,
    find_minimum,
)
from .errors import (
    BelowThresholdError,
    BracketingError,
    ConfigError,
    DegenerateMaximumError,
    ExpansionFitError,
    FriedrichsError,
    InvalidDispersionError,
    InvalidInputError,
    ModelValidityError,
    NewtonConvergenceError,
    NonUniqueMaximumError,
    QuadratureError,
    QuadratureNotConvergedError,
    TrivialFormFactorError,
    UnsupportedFamilyError,
)
from .models import (
    DispersionModel,
    ModelConfig,
    eval_grad_w,
    eval_hess_w,
    eval_phi,
    eval_w,
    model_from_config,
    two_particle_model,
)
from .oracle import (
    ConvergenceReport,
    OracleResult,
    convergence_report,
    dense_spectrum,
    discrete_omega,
    richardson_omega_threshold,
    secular_root,
)
from .quadrature import (
    NormDiagnostics,
    OmegaEvaluator,
    OmegaValue,
    QuadratureSpec,
    omega,
    omega_threshold,
    state_norm_diagnostics,
)
from .solver import (
    Classification,
    ClassificationResult,
    EigenfunctionEval,
    ExpansionFit,
    SpectralReport,
    analyze,
    classify_threshold,
    coupling_threshold,
    eigenfunction,
    eigenvalue_error_estimate,
    expansion_fit,
    fredholm_det,
    solve_eigenvalue,
    tau0_closed_form,
)
from .torus import TorusVector, torus_distance, wrap_torus

__version__ = "0.1.0"

__all__ = [
    "BelowThresholdError", "BracketingError", "Classification",
    "ClassificationResult", "ClosedFormCheck", "ConfigError",
    "ConvergenceReport", "CriticalPointInfo", "DegenerateMaximumError",
    "DispersionModel", "EigenfunctionEval", "ExpansionFit",
    "ExpansionFitError", "FriedrichsError", "InvalidDispersionError",
    "InvalidInputError", "ModelConfig", "ModelValidityError",
    "NewtonConvergenceError", "NonUniqueMaximumError", "NormDiagnostics",
    "OmegaEvaluator", "OmegaValue", "OracleResult", "QuadratureError",
    "QuadratureNotConvergedError", "QuadratureSpec", "SpectralReport",
    "TorusVector", "TrivialFormFactorError", "UnsupportedFamilyError",
    "analyze", "classify_threshold", "closed_form_check",
    "convergence_report", "coupling_threshold", "dense_spectrum",
    "discrete_omega", "eigenfunction", "eigenvalue_error_estimate",
    "eval_grad_w", "eval_hess_w",
    "eval_phi", "eval_w", "expansion_fit", "find_maximizer", "find_minimum",
    "fredholm_det", "model_from_config", "omega", "omega_threshold",
    "richardson_omega_threshold", "secular_root", "solve_eigenvalue",
    "state_norm_diagnostics", "tau0_closed_form", "torus_distance",
    "two_particle_model", "wrap_torus", "__version__",
]
