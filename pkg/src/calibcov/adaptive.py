"""Adaptive selection of the truncation level over a dyadic grid.

The base estimator is run once per grid level with confidence delta / J;
the selected level is the smallest one that agrees, in the whitened metric
of every coarser level, with all coarser levels up to the sum of their
certificates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .calibrated import (
    AUTO,
    CalibratedConfig,
    CalibratedEstimate,
    _auto_upper,
    _iteration_count,
    run_algorithm1,
)
from .errors import InvalidRange, SampleTooSmall
from .symmat import cholesky_factor, spectral_norm, symmetrize


@dataclass(frozen=True)
class ThetaGrid:
    theta_min: float
    theta_max: float
    levels: tuple

    @property
    def size(self) -> int:
        return len(self.levels)


@dataclass(frozen=True)
class AdaptiveResult:
    selected_index: int
    selected_estimate: CalibratedEstimate
    grid: ThetaGrid
    epsilons: tuple
    estimates: list = field(repr=False)
    pairwise_tests: np.ndarray = field(repr=False)


def build_grid(theta_min, theta_max) -> ThetaGrid:
    """Dyadic levels 2^j * theta_min for integer j >= 0, up to 2 * theta_max."""
    if not 0 < theta_min <= theta_max:
        raise InvalidRange("need 0 < theta_min <= theta_max")
    levels = []
    level = float(theta_min)
    # tolerate float noise at the 2 * theta_max boundary
    bound = 2.0 * theta_max * (1.0 + 1e-12)
    while level <= bound:
        levels.append(level)
        level *= 2.0
    return ThetaGrid(theta_min=float(theta_min), theta_max=float(theta_max), levels=tuple(levels))


def epsilon_j(theta_j, q, d, delta, n, grid_size):
    """Per-level certificate: the base error bound evaluated at confidence
    delta / grid_size."""
    return (
        24.0
        * theta_j
        * math.sqrt(
            q
            * math.log(4 * q * d * grid_size / delta)
            * math.log(4 * d * grid_size / delta)
        )
        / n
    )


def pairwise_test(est_j, est_jp, lam, eps_j, eps_jp):
    """True iff the two estimates agree in the whitened metric of est_jp:
    || (S_jp + lam I)^{-1/2} (S_jp - S_j) (S_jp + lam I)^{-1/2} || <= 2 (eps_jp + eps_j)."""
    R = cholesky_factor(est_jp, lam).lower
    D = est_jp - est_j
    M = solve_triangular(R, D, lower=True, check_finite=False)
    M = solve_triangular(R, M.T, lower=True, check_finite=False)
    return spectral_norm(symmetrize(M)) <= 2.0 * (eps_jp + eps_j)


def lepskii_select(estimates, epsilons, lam, return_table=False):
    """Smallest index j whose estimate passes the pairwise test against every
    larger index; the largest index passes vacuously."""
    J = len(estimates)
    table = np.zeros((J, J), dtype=bool)
    selected = J - 1
    for j in range(J):
        ok = True
        for jp in range(j + 1, J):
            passed = pairwise_test(
                estimates[j], estimates[jp], lam, epsilons[j], epsilons[jp]
            )
            table[j, jp] = passed
            ok = ok and passed
        if ok:
            selected = j
            break
    if return_table:
        return selected, table
    return selected


def auto_grid(n, q, d, delta) -> ThetaGrid:
    """Theory-driven grid: J = 1 + ceil(log2(n / 96q) / 2) levels with
    theta_max = n / (96 q log(4qdJ/delta)) and theta_min = 2^(1-J) theta_max."""
    if n < 96 * q:
        raise SampleTooSmall(f"need n >= 96q = {96 * q} for the automatic grid")
    J = 1 + math.ceil(0.5 * math.log2(n / (96 * q)) - 1e-9)
    theta_max = n / (96 * q * math.log(4 * q * d * J / delta))
    theta_min = 2.0 ** (1 - J) * theta_max
    grid = build_grid(theta_min, theta_max)
    return grid


def run_algorithm2(
    X, cfg: CalibratedConfig, grid: ThetaGrid | str = AUTO, kappa=None, df_lam=None
) -> AdaptiveResult:
    """Run the base estimator at every grid level and select adaptively.

    Every per-level run receives confidence delta / J so that the per-level
    certificates hold jointly.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    upper = cfg.upper
    if upper == AUTO:
        upper, X = _auto_upper(X, cfg.lam, cfg.delta)
    n, d = X.shape
    q = _iteration_count(cfg.lam, upper) + 1

    if grid == AUTO:
        grid = auto_grid(n, q, d, cfg.delta)
    J = grid.size

    estimates = []
    epsilons = []
    for theta_j in grid.levels:
        level_cfg = CalibratedConfig(
            delta=cfg.delta / J,
            lam=cfg.lam,
            upper=upper,
            theta=theta_j,
            keep_intermediate=cfg.keep_intermediate,
        )
        est = run_algorithm1(X, level_cfg, kappa=kappa, df_lam=df_lam)
        estimates.append(est)
        epsilons.append(epsilon_j(theta_j, q, d, cfg.delta, n, J))

    selected, table = lepskii_select(
        [e.estimate for e in estimates], epsilons, cfg.lam, return_table=True
    )
    return AdaptiveResult(
        selected_index=selected,
        selected_estimate=estimates[selected],
        grid=grid,
        epsilons=tuple(epsilons),
        estimates=estimates,
        pairwise_tests=table,
    )
