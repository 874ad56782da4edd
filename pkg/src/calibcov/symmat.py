"""Symmetric/PSD matrix primitives.

All matrices are plain ``numpy`` arrays of shape ``(d, d)``; symmetry is
maintained by construction (every operation returning a matrix symmetrizes
its output).  Inverse square roots are never formed explicitly: every
``S_lambda^{-1/2} M S_lambda^{-1/2}`` expression is realized through the
Cholesky factor of ``S + lambda I``, which preserves the spectral norm of a
symmetric congruend by similarity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DegenerateInput, FactorizationFailure

# Absolute slack on minimum eigenvalue in PSD checks, scaled by 1 + ||A||.
TOL_PSD = 1e-9
# Relative accuracy of Cholesky reconstruction and eigenvalue computations.
TOL_CHOL = 1e-10
TOL_EIG = 1e-10


@dataclass(frozen=True)
class CholFactor:
    """Lower-triangular factor R with R R^T = A + lam * I."""

    lower: np.ndarray
    lam: float

    @property
    def dim(self) -> int:
        return self.lower.shape[0]


def symmetrize(A):
    """Average A with its transpose, enforcing exact symmetry."""
    A = np.asarray(A, dtype=np.float64)
    return 0.5 * (A + A.T)


def regularize(A, lam):
    """A + lam * I."""
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    A = np.asarray(A, dtype=np.float64)
    out = A.copy()
    out[np.diag_indices_from(out)] += lam
    return out


def cholesky_factor(A, lam):
    """Cholesky factor of A + lam * I for a PSD matrix A.

    Raises FactorizationFailure when a pivot is non-positive, which signals
    a non-PSD input (an upstream invariant violation).
    """
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    try:
        R = np.linalg.cholesky(regularize(A, lam))
    except np.linalg.LinAlgError as exc:
        raise FactorizationFailure(
            f"Cholesky failed at regularization level {lam}: {exc}"
        ) from exc
    return CholFactor(lower=R, lam=float(lam))


def whiten(factor: CholFactor, x):
    """R^{-1} x via forward substitution; x may be a vector or (n, d) rows."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        return solve_triangular(factor.lower, x, lower=True, check_finite=False)
    return solve_triangular(factor.lower, x.T, lower=True, check_finite=False).T


def spectral_norm(A):
    """Largest absolute eigenvalue of a symmetric matrix."""
    A = np.asarray(A, dtype=np.float64)
    if A.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvalsh(A))))


def sorted_eigenvalues(A):
    """All eigenvalues of a symmetric matrix in non-increasing order."""
    return np.linalg.eigvalsh(np.asarray(A, dtype=np.float64))[::-1]


def min_eigenvalue(A):
    return float(np.linalg.eigvalsh(np.asarray(A, dtype=np.float64))[0])


def calibrated_error(S, Shat, lam):
    """|| S_lam^{-1/2} (Shat - S) S_lam^{-1/2} || via the Cholesky factor of S_lam."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    S = np.asarray(S, dtype=np.float64)
    Shat = np.asarray(Shat, dtype=np.float64)
    R = cholesky_factor(S, lam).lower
    D = Shat - S
    M = solve_triangular(R, D, lower=True, check_finite=False)
    M = solve_triangular(R, M.T, lower=True, check_finite=False)
    return spectral_norm(symmetrize(M))


def sandwich_check(S, Shat, lam, eps):
    """True iff (1-eps) S_lam <= Shat_lam <= (1+eps) S_lam in the PSD order.

    Minimum-eigenvalue checks carry the tol_psd slack to absorb floating
    point noise in rank-one accumulations.
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    S_lam = regularize(S, lam)
    Shat_lam = regularize(Shat, lam)
    lower_gap = Shat_lam - (1.0 - eps) * S_lam
    upper_gap = (1.0 + eps) * S_lam - Shat_lam
    slack_lo = TOL_PSD * (1.0 + spectral_norm(lower_gap))
    slack_hi = TOL_PSD * (1.0 + spectral_norm(upper_gap))
    return (
        min_eigenvalue(lower_gap) >= -slack_lo
        and min_eigenvalue(upper_gap) >= -slack_hi
    )


def degrees_of_freedom(S, lam):
    """tr(S (S + lam I)^{-1}) = sum_i sigma_i / (sigma_i + lam).

    At lam = 0 this is the rank of S, counting eigenvalues above
    tol_eig * ||S|| (the continuous limit of the formula).
    """
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    sig = np.linalg.eigvalsh(np.asarray(S, dtype=np.float64))
    sig = np.clip(sig, 0.0, None)
    if lam == 0:
        top = sig.max(initial=0.0)
        return float(np.count_nonzero(sig > TOL_EIG * top))
    return float(np.sum(sig / (sig + lam)))


def effective_rank(S):
    """tr(S) / ||S||; at least 1 for a nonzero PSD matrix."""
    S = np.asarray(S, dtype=np.float64)
    norm = spectral_norm(S)
    if norm == 0.0:
        raise DegenerateInput("effective rank of the zero matrix is undefined")
    return float(np.trace(S)) / norm


def hermitian_dilation(z):
    """(d+1) x (d+1) symmetric embedding of the vector z.

    Zero diagonal blocks, z in the top-right block; the nonzero eigenvalues
    are exactly +-||z||.
    """
    z = np.asarray(z, dtype=np.float64)
    d = z.shape[0]
    H = np.zeros((d + 1, d + 1))
    H[:d, d] = z
    H[d, :d] = z
    return H


def spectral_truncate(A, theta):
    """Apply the scalar clipping map to the eigenvalues of A."""
    if theta <= 0:
        raise ValueError("theta must be positive")
    A = np.asarray(A, dtype=np.float64)
    vals, vecs = np.linalg.eigh(A)
    clipped = np.clip(vals, -theta, theta)
    return symmetrize((vecs * clipped) @ vecs.T)
