"""Thresholded Lasso and Gauss-Dantzig estimators with incoherence diagnostics."""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .core import (
    DesignMatrix,
    DomainError,
    LogBase,
    NoiseSpec,
    PenaltyScale,
    Signal,
    ThlassoError,
    lambda_base,
    noise_bound,
    normalize_columns,
)
from .dantzig import DantzigOptions, InfeasibleError, fit_dantzig
from .ensembles import (
    EnsembleKind,
    EnsembleSpec,
    RandomSource,
    TigerBetaSpec,
    gen_beta_const,
    gen_beta_spiked,
    gen_beta_tiger,
    gen_design,
    gen_observation,
)
from .estimators import (
    EstimatorResult,
    SelectionSet,
    SingularDesignError,
    gauss_dantzig,
    ols_refit,
    threshold_select,
    thresholded_lasso,
)
from .lasso import ConvergenceError, FitResult, LassoOptions, fit_adaptive_lasso, fit_lasso, lasso_path
from .metrics import confusion, error_decomposition, exact_sign_recovery, rates, rho_squared

__all__ = [
    "BACKEND", "ConvergenceError", "DantzigOptions", "DesignMatrix", "DomainError", "EnsembleKind",
    "EnsembleSpec", "EstimatorResult", "FitResult", "InfeasibleError", "LassoOptions", "LogBase",
    "NoiseSpec", "PenaltyScale", "RandomSource", "SelectionSet", "Signal", "SingularDesignError",
    "ThlassoError", "TigerBetaSpec", "confusion", "error_decomposition", "exact_sign_recovery",
    "fit_adaptive_lasso", "fit_dantzig", "fit_lasso", "gauss_dantzig", "gen_beta_const",
    "gen_beta_spiked", "gen_beta_tiger", "gen_design", "gen_observation", "lambda_base", "lasso_path",
    "noise_bound", "normalize_columns", "ols_refit", "rates", "rho_squared", "threshold_select",
    "thresholded_lasso",
]
