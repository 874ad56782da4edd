"""Robust, affine-invariant covariance estimation for heavy-tailed data."""

__version__ = "0.1.0"

from .adaptive import AdaptiveResult, ThetaGrid, auto_grid, build_grid, run_algorithm2
from .applications import (
    EigenReport,
    RidgeConfig,
    RidgeEstimate,
    eigenvalue_intervals,
    excess_risk,
    robust_ridge,
    subspace_iteration,
)
from .calibrated import (
    BatchPlan,
    CalibratedConfig,
    CalibratedEstimate,
    error_bound,
    plan_batches,
    run_algorithm1,
    theta_star,
)
from .harness import DistributionSpec, coverage_report, kurtosis, run_trials, sample
from .kernels import backend_name
from .symmat import (
    calibrated_error,
    degrees_of_freedom,
    effective_rank,
    sandwich_check,
    spectral_norm,
)
from .truncation import WeightedEstimate, psi, rho, wei_minsker, wm_theta

__all__ = [
    "AdaptiveResult",
    "BatchPlan",
    "CalibratedConfig",
    "CalibratedEstimate",
    "DistributionSpec",
    "EigenReport",
    "RidgeConfig",
    "RidgeEstimate",
    "ThetaGrid",
    "WeightedEstimate",
    "auto_grid",
    "backend_name",
    "build_grid",
    "calibrated_error",
    "coverage_report",
    "degrees_of_freedom",
    "effective_rank",
    "eigenvalue_intervals",
    "error_bound",
    "excess_risk",
    "kurtosis",
    "plan_batches",
    "psi",
    "rho",
    "robust_ridge",
    "run_algorithm1",
    "run_algorithm2",
    "run_trials",
    "sample",
    "sandwich_check",
    "spectral_norm",
    "subspace_iteration",
    "theta_star",
    "wei_minsker",
    "wm_theta",
]
