"""Downstream uses of the calibrated estimate: relative-scale eigenvalue
intervals, subspace iteration for PCA, and robust ridge regression."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from . import kernels
from .errors import DataError, InvalidConfidence, InvalidEpsilon
from .symmat import (
    cholesky_factor,
    hermitian_dilation,
    sorted_eigenvalues,
    spectral_truncate,
)


@dataclass(frozen=True)
class EigenReport:
    """Estimated eigenvalues with certified relative-error intervals for the
    top k of them."""

    eigenvalues: np.ndarray
    radius: float  # certified relative radius 2 * eps
    k: int
    intervals: tuple  # (low, high) certified range for each true eigenvalue, i <= k
    gap_ratio_bounds: tuple  # (low, high) bounds on lambda_i / lambda_k


def eigenvalue_intervals(Shat, eps, k) -> EigenReport:
    """Certified ranges [hat/(1+2eps), hat/(1-2eps)] for the top-k true
    eigenvalues, given a calibrated error of at most eps < 1/2."""
    if eps < 0 or eps >= 0.5:
        raise InvalidEpsilon(f"need 0 <= eps < 1/2, got {eps}")
    vals = sorted_eigenvalues(Shat)
    if not 1 <= k <= vals.shape[0]:
        raise ValueError(f"k must be in 1..{vals.shape[0]}")
    radius = 2.0 * eps
    intervals = tuple(
        (v / (1.0 + radius), v / (1.0 - radius)) for v in vals[:k]
    )
    shrink = (1.0 - radius) ** 2
    ratios = tuple(
        (shrink * vals[i] / vals[k - 1], vals[i] / (shrink * vals[k - 1]))
        for i in range(k)
    )
    return EigenReport(
        eigenvalues=vals, radius=radius, k=int(k), intervals=intervals,
        gap_ratio_bounds=ratios,
    )


@dataclass(frozen=True)
class SubspaceResult:
    basis: np.ndarray
    iterations: int
    residual: float
    converged: bool


def subspace_iteration(
    Shat, k, max_iters=1000, tol=1e-10, initial=None, seed=0
) -> SubspaceResult:
    """Multiply-and-orthonormalize iteration converging to the top-k
    eigenspace; non-convergence within max_iters is reported, not raised."""
    Shat = np.asarray(Shat, dtype=np.float64)
    d = Shat.shape[0]
    if not 1 <= k <= d:
        raise ValueError(f"k must be in 1..{d}")
    if initial is None:
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        initial = rng.standard_normal((d, k))
    U, _ = np.linalg.qr(np.asarray(initial, dtype=np.float64).reshape(d, k))
    residual = math.inf
    iterations = 0
    for iterations in range(max_iters + 1):
        W = Shat @ U
        residual = float(np.linalg.norm(W - U @ (U.T @ W), ord=2))
        if residual <= tol:
            return SubspaceResult(U, iterations, residual, True)
        U, _ = np.linalg.qr(W)
    return SubspaceResult(U, iterations, residual, False)


@dataclass(frozen=True)
class RidgeConfig:
    lam: float
    delta: float = 0.1
    kappa: float = 1.0  # design kurtosis
    response_kurtosis: float = 1.0
    response_second_moment: float = 1.0
    theta_bar: float | str = "auto"

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if self.kappa < 1 or self.response_kurtosis < 1:
            raise ValueError("kurtosis parameters must be at least 1")
        if self.response_second_moment <= 0:
            raise ValueError("response second moment must be positive")


@dataclass(frozen=True)
class RidgeEstimate:
    weights: np.ndarray
    zbar: np.ndarray
    theta_bar: float
    n: int
    chol_lower: np.ndarray = field(repr=False)


def ridge_theta_bar(n, kappa, response_kurtosis, v2, df_lam, delta):
    """sqrt(n kappa^2 vkappa^2 v^2 df_lam / log(1/delta))."""
    if not 0 < delta < 1:
        raise InvalidConfidence(f"delta must be in (0, 1), got {delta}")
    return math.sqrt(n * kappa**2 * response_kurtosis**2 * v2 * df_lam / math.log(1 / delta))


def _truncated_z_weights(norms, theta_bar):
    # rho_theta(||z||^{1/2}) = psi_theta(||z||) / ||z||: norm-level clipping
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(norms <= theta_bar, 1.0, theta_bar / norms)
    return w


def robust_ridge(X, y, Shat, cfg: RidgeConfig) -> RidgeEstimate:
    """Robust ridge weights from decorrelated moment observations.

    Each observation contributes z_i = R^{-1} (x_i y_i) with R the Cholesky
    factor of Shat + lam I; z_i is clipped to norm theta_bar, averaged in a
    deterministic order, and mapped back through R^{-T}.  Shat must come
    from a sample disjoint from (X, y) for the guarantees to apply (caller
    contract).
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if X.shape[0] != y.shape[0]:
        raise DataError(
            f"responses length {y.shape[0]} does not match {X.shape[0]} rows"
        )
    n = X.shape[0]
    R = cholesky_factor(Shat, cfg.lam).lower

    theta_bar = cfg.theta_bar
    if theta_bar == "auto":
        theta_bar = ridge_theta_bar(
            n,
            cfg.kappa,
            cfg.response_kurtosis,
            cfg.response_second_moment,
            max(1.0, np.trace(solve_triangular(
                R, solve_triangular(R, Shat, lower=True, check_finite=False).T,
                lower=True, check_finite=False,
            ))),
            cfg.delta,
        )

    Z = solve_triangular(R, (X * y[:, None]).T, lower=True, check_finite=False).T
    Z = np.ascontiguousarray(Z)
    norms = kernels.row_norms(Z)
    w = _truncated_z_weights(norms, theta_bar)
    zbar = np.zeros(X.shape[1])
    for i in range(n):  # deterministic sequential reduction
        zbar += w[i] * Z[i]
    zbar /= n
    weights = solve_triangular(R.T, zbar, lower=False, check_finite=False)
    return RidgeEstimate(
        weights=weights, zbar=zbar, theta_bar=float(theta_bar), n=n, chol_lower=R
    )


def plain_ridge(X, y, lam):
    """Ordinary ridge regression weights (X'X/n + lam I)^{-1} X'y / n."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    n, d = X.shape
    G = X.T @ X / n + lam * np.eye(d)
    return np.linalg.solve(G, X.T @ y / n)


def dilation_mean(zhats, theta_bar):
    """Truncated mean computed through the symmetric-dilation route.

    Averages the spectrally clipped dilation of every z_i and extracts the
    vector block; must agree with the direct norm-clipped mean.
    """
    zhats = [np.asarray(z, dtype=np.float64) for z in zhats]
    d = zhats[0].shape[0]
    acc = np.zeros((d + 1, d + 1))
    for z in zhats:
        acc += spectral_truncate(hermitian_dilation(z), theta_bar)
    acc /= len(zhats)
    return acc[:d, d]


def excess_risk(w, w_star, S):
    """(w - w*)' S (w - w*), the population excess quadratic risk."""
    diff = np.asarray(w, dtype=np.float64) - np.asarray(w_star, dtype=np.float64)
    return float(diff @ np.asarray(S, dtype=np.float64) @ diff)
