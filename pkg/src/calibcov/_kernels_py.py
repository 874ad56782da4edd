"""Pure-python (numpy/scipy) fallback for the hot kernels.

Functionally identical to the compiled versions in ``_accel``; results may
differ from them in the last floating-point bits because BLAS reductions use
a different (but still deterministic per build) summation order.
"""

import numpy as np
from scipy.linalg import solve_triangular


def whiten_norms(R, X):
    Z = solve_triangular(R, X.T, lower=True, check_finite=False)
    return np.sqrt(np.einsum("ji,ji->i", Z, Z))


def weighted_outer_mean(X, w):
    out = (w[:, None] * X).T @ X
    out += out.T
    out *= 0.5 / X.shape[0]
    return out


def row_norms(X):
    return np.sqrt(np.einsum("ij,ij->i", X, X))
