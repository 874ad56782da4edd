"""Scalar truncation maps and the norm-truncated covariance estimator,
together with its theory-driven threshold formulas."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DegenerateInput, InvalidConfidence
from .symmat import effective_rank, spectral_norm


def psi(x, theta):
    """Clip x to [-theta, theta] preserving sign."""
    if theta <= 0:
        raise ValueError("theta must be positive")
    return np.clip(x, -theta, theta)


def rho(x, theta):
    """psi_theta(x^2) / x^2 for x >= 0, extended continuously with rho(0) = 1.

    Equals 1 when x^2 <= theta and theta / x^2 otherwise; this is the weight
    put on an observation of norm x.
    """
    if theta <= 0:
        raise ValueError("theta must be positive")
    x = np.asarray(x, dtype=np.float64)
    sq = x * x
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(sq <= theta, 1.0, theta / sq)
    if x.ndim == 0:
        return float(w)
    return w


@dataclass(frozen=True)
class WeightedEstimate:
    """A weighted sample covariance (1/n) sum_i w_i x_i x_i^T."""

    estimate: np.ndarray
    weights: np.ndarray
    theta: float


def wei_minsker(X, theta) -> WeightedEstimate:
    """Truncated covariance estimator with weights rho_theta(||x_i||).

    Observations with squared norm above theta are scaled down; the result
    is PSD by construction and dominated by the sample covariance.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    norms = kernels.row_norms(X)
    weights = rho(norms, theta)
    est = kernels.weighted_outer_mean(X, weights)
    return WeightedEstimate(estimate=est, weights=weights, theta=float(theta))


def wm_theta(n, w_bar, d, delta):
    """Threshold sqrt(n * w_bar / log(2d / delta)) for the truncated estimator.

    w_bar must upper-bound the second moment statistic ||E[||X||^2 X x X]||;
    with this choice the estimator's spectral error is at most
    2 * sqrt(w_bar * log(2d/delta) / n) with probability 1 - delta.
    """
    if not 0 < delta <= 1:
        raise InvalidConfidence(f"delta must be in (0, 1], got {delta}")
    if w_bar <= 0:
        raise ValueError("w_bar must be positive")
    return math.sqrt(n * w_bar / math.log(2 * d / delta))


def wm_error_bound(n, w_bar, d, delta):
    """High-probability spectral error bound matching the wm_theta threshold."""
    if not 0 < delta <= 1:
        raise InvalidConfidence(f"delta must be in (0, 1], got {delta}")
    return 2.0 * math.sqrt(w_bar * math.log(2 * d / delta) / n)


def second_moment_bound(S, kappa):
    """kappa^4 * ||S|| * tr(S), an upper bound on ||E[||X||^2 X x X]||
    under the directional-kurtosis assumption."""
    if kappa < 1:
        raise ValueError("kappa must be at least 1")
    norm = spectral_norm(S)
    if norm == 0.0:
        raise DegenerateInput("second moment bound undefined for the zero matrix")
    return kappa**4 * norm**2 * effective_rank(S)
