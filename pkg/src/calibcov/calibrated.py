"""Iterative calibrated covariance estimation.

The estimator splits the sample into batches, starts from a rescaled
truncated estimate at the crudest regularization level L, and halves the
regularization level once per batch while re-truncating in the whitened
geometry of the current estimate.  The final half-sample batch is processed
with an enlarged truncation level.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import InvalidConfidence, InvalidRange, SampleTooSmall
from .symmat import cholesky_factor, degrees_of_freedom, spectral_norm
from .truncation import rho, wei_minsker, wm_theta

AUTO = "auto"

# Seed for the deterministic random directions used by the kappa estimator.
_KAPPA_PROBE_SEED = 0x5EED_D1AE


@dataclass(frozen=True)
class BatchPlan:
    """Sample-splitting schedule: q = T + 1 refinement batches of size m
    followed by a final batch of size r >= n/2."""

    n: int
    T: int
    m: int
    r: int

    @property
    def q(self) -> int:
        return self.T + 1

    def batch_range(self, t):
        """Index range [start, stop) of refinement batch t, 0 <= t <= T."""
        if not 0 <= t <= self.T:
            raise IndexError(f"batch index {t} outside 0..{self.T}")
        return t * self.m, (t + 1) * self.m

    def final_range(self):
        return self.m * (self.T + 1), self.n

    def ranges(self):
        """All q + 1 disjoint index ranges, refinement batches then final."""
        return [self.batch_range(t) for t in range(self.T + 1)] + [self.final_range()]


@dataclass(frozen=True)
class CalibratedConfig:
    delta: float
    lam: float
    upper: float | str = AUTO
    theta: float | str = AUTO
    keep_intermediate: bool = False

    def __post_init__(self):
        if not 0 < self.delta <= 1:
            raise InvalidConfidence(f"delta must be in (0, 1], got {self.delta}")
        if self.lam <= 0:
            raise ValueError("lambda must be positive")
        if self.upper != AUTO:
            if self.upper <= 0 or self.lam > self.upper:
                raise InvalidRange("need 0 < lambda <= upper")
        if self.theta != AUTO and self.theta <= 0:
            raise ValueError("theta must be positive")


@dataclass(frozen=True)
class CalibratedEstimate:
    estimate: np.ndarray
    final_weights: np.ndarray
    plan: BatchPlan
    theta_used: float
    theta_final: float
    lambda_schedule: tuple
    epsilon: float
    delta: float
    lam: float
    upper: float
    intermediate_estimates: list | None = field(default=None, repr=False)


def _iteration_count(lam, upper):
    # ceil(log2(L / lambda)) with a guard against float noise at exact powers
    ratio = upper / lam
    if ratio < 1:
        raise InvalidRange("need lambda <= upper")
    return max(0, math.ceil(math.log2(ratio) - 1e-9))


def plan_batches(n, lam, upper) -> BatchPlan:
    """Batch schedule of the iterative estimator.

    T = ceil(log2(upper / lam)) refinement iterations, q = T + 1 batches of
    size m = floor(n / (2q)), final batch of size r = n - m*q >= n/2.
    """
    T = _iteration_count(lam, upper)
    q = T + 1
    if n < 4 * q:
        raise SampleTooSmall(f"need n >= 4q = {4 * q}, got n = {n}")
    m = n // (2 * q)
    r = n - m * q
    return BatchPlan(n=n, T=T, m=m, r=r)


def theta_star(n, d, delta, lam, upper, kappa, df_lam):
    """Optimal truncation level 2 kappa^2 sqrt(n df / (q log(4qd/delta)))."""
    if not 0 < delta <= 1:
        raise InvalidConfidence(f"delta must be in (0, 1], got {delta}")
    q = _iteration_count(lam, upper) + 1
    return 2.0 * kappa**2 * math.sqrt(n * df_lam / (q * math.log(4 * q * d / delta)))


def min_sample_size(theta, q, d, delta):
    """Sufficient sample size ceil(48 q theta log(4qd/delta)); advisory only."""
    return math.ceil(48 * q * theta * math.log(4 * q * d / delta))


def final_theta(theta, T, d, delta):
    """Enlarged truncation level for the final half-sample batch.

    Algebraically equal to 2 theta sqrt(q log(4qd/delta) / log(4d/delta))
    with q = T + 1.
    """
    if not 0 < delta <= 1:
        raise InvalidConfidence(f"delta must be in (0, 1], got {delta}")
    return (
        2.0
        * theta
        * math.sqrt(T + 1)
        * math.sqrt(1.0 + math.log(T + 1) / math.log(4 * d / delta))
    )


def error_bound(theta, q, d, delta, n):
    """High-probability calibrated-error certificate
    24 theta sqrt(q log(4qd/delta) log(4d/delta)) / n."""
    return (
        24.0
        * theta
        * math.sqrt(q * math.log(4 * q * d / delta) * math.log(4 * d / delta))
        / n
    )


def initial_estimate(batch0, upper, theta):
    """First-level estimate: the truncated estimator of the batch rescaled by
    1/sqrt(upper), times upper; weights are rho_theta(||x_i|| / sqrt(upper))."""
    X = np.ascontiguousarray(batch0, dtype=np.float64)
    norms = kernels.row_norms(X) / math.sqrt(upper)
    weights = rho(norms, theta)
    return kernels.weighted_outer_mean(X, weights)


def refine_step(current, lam_t, batch, theta, return_weights=False):
    """One whitened-truncation refinement.

    Weights are rho_theta of the norms of R^{-1} x_i with R the Cholesky
    factor of current + lam_t * I.
    """
    X = np.ascontiguousarray(batch, dtype=np.float64)
    R = cholesky_factor(current, lam_t).lower
    norms = kernels.whiten_norms(R, X)
    weights = rho(norms, theta)
    est = kernels.weighted_outer_mean(X, weights)
    if return_weights:
        return est, weights
    return est


def estimate_kappa(X, n_directions=100, seed=_KAPPA_PROBE_SEED):
    """Plug-in directional kurtosis: max over the coordinate axes and
    n_directions seeded random directions of (mean u'x^4)^(1/4) / (mean u'x^2)^(1/2)."""
    X = np.asarray(X, dtype=np.float64)
    d = X.shape[1]
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    dirs = rng.standard_normal((n_directions, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    U = np.vstack([np.eye(d), dirs])
    proj = X @ U.T
    m2 = np.mean(proj**2, axis=0)
    m4 = np.mean(proj**4, axis=0)
    ok = m2 > 0
    if not np.any(ok):
        return 1.0
    ratios = m4[ok] ** 0.25 / np.sqrt(m2[ok])
    return float(max(1.0, np.max(ratios)))


def _auto_upper(X, lam, delta):
    """Data-driven L = 2 ||S_wm|| from a leading subsample, using a plug-in
    second-moment statistic for the truncation threshold.  Returns the chosen
    L and the remaining sample for the main run."""
    n, d = X.shape
    n0 = max(4, n // 4)
    sub = np.ascontiguousarray(X[:n0])
    norms_sq = kernels.row_norms(sub) ** 2
    w_bar = spectral_norm(kernels.weighted_outer_mean(sub, norms_sq))
    if w_bar <= 0:
        raise InvalidRange("cannot calibrate upper level on a zero subsample")
    swm = wei_minsker(sub, wm_theta(n0, w_bar, d, delta)).estimate
    norm_swm = spectral_norm(swm)
    if lam > (2.0 / 3.0) * norm_swm:
        raise InvalidRange(
            f"lambda = {lam} exceeds 2/3 of the estimated spectral norm {norm_swm}"
        )
    return 2.0 * norm_swm, X[n0:]


def run_algorithm1(
    X, cfg: CalibratedConfig, kappa=None, df_lam=None
) -> CalibratedEstimate:
    """Full iterative calibrated estimation run.

    When cfg.theta is 'auto' the truncation level is resolved to theta_star
    using the supplied (kappa, df_lam) hints, falling back to plug-in
    estimates computed on a held-out quarter of the first batch.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be an (n, d) matrix")
    upper = cfg.upper
    if upper == AUTO:
        upper, X = _auto_upper(X, cfg.lam, cfg.delta)
    n, d = X.shape

    plan = plan_batches(n, cfg.lam, upper)
    T, q, m = plan.T, plan.q, plan.m

    theta = cfg.theta
    if theta == AUTO:
        b0, b1 = plan.batch_range(0)
        batch0 = X[b0:b1]
        if kappa is None:
            kappa = estimate_kappa(batch0[: max(1, m // 4)])
        if df_lam is None:
            sample_cov = kernels.weighted_outer_mean(
                np.ascontiguousarray(batch0), np.ones(m)
            )
            df_lam = max(1.0, degrees_of_freedom(sample_cov, cfg.lam))
        theta = theta_star(n, d, cfg.delta, cfg.lam, upper, kappa, df_lam)

    if math.isfinite(theta):
        n_min = min_sample_size(theta, q, d, cfg.delta)
        if n < n_min:
            warnings.warn(
                f"sample size n = {n} below the sufficient size {n_min} for "
                f"theta = {theta:.6g}; the error certificate may be loose",
                stacklevel=2,
            )

    b0, b1 = plan.batch_range(0)
    current = initial_estimate(X[b0:b1], upper, theta)
    intermediates = [current] if cfg.keep_intermediate else None

    lam_t = float(upper)
    schedule = [lam_t]
    for t in range(T):
        b0, b1 = plan.batch_range(t + 1)
        current = refine_step(current, lam_t, X[b0:b1], theta)
        lam_t /= 2.0
        schedule.append(lam_t)
        if intermediates is not None:
            intermediates.append(current)

    theta_fin = final_theta(theta, T, d, cfg.delta)
    f0, f1 = plan.final_range()
    estimate, weights = refine_step(
        current, lam_t, X[f0:f1], theta_fin, return_weights=True
    )

    return CalibratedEstimate(
        estimate=estimate,
        final_weights=weights,
        plan=plan,
        theta_used=float(theta),
        theta_final=float(theta_fin),
        lambda_schedule=tuple(schedule),
        epsilon=error_bound(theta, q, d, cfg.delta, n),
        delta=cfg.delta,
        lam=cfg.lam,
        upper=float(upper),
        intermediate_estimates=intermediates,
    )
