# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: forward-substitution whitening norms and the
deterministic weighted outer-product accumulation.

Both loops run in the fixed sequential order (over observations, row-major
within the matrix) required for bit-reproducible runs.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def whiten_norms(double[:, ::1] R, double[:, ::1] X):
    """Euclidean norms of R^{-1} x_i for each row x_i of X.

    R is lower-triangular with strictly positive diagonal.
    """
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t d = X.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double acc, s
    out = np.empty(n, dtype=np.float64)
    work = np.empty(d, dtype=np.float64)
    cdef double[::1] o = out
    cdef double[::1] y = work
    for i in range(n):
        s = 0.0
        for j in range(d):
            acc = X[i, j]
            for k in range(j):
                acc -= R[j, k] * y[k]
            acc /= R[j, j]
            y[j] = acc
            s += acc * acc
        o[i] = sqrt(s)
    return out


def weighted_outer_mean(double[:, ::1] X, double[::1] w):
    """(1/n) sum_i w_i x_i x_i^T accumulated sequentially over i."""
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t d = X.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double wi, xj
    out = np.zeros((d, d), dtype=np.float64)
    cdef double[:, ::1] a = out
    for i in range(n):
        wi = w[i]
        if wi == 0.0:
            continue
        for j in range(d):
            xj = wi * X[i, j]
            for k in range(j, d):
                a[j, k] += xj * X[i, k]
    for j in range(d):
        for k in range(j, d):
            a[j, k] /= n
            a[k, j] = a[j, k]
    return out


def row_norms(double[:, ::1] X):
    """Euclidean norm of every row of X."""
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t d = X.shape[1]
    cdef Py_ssize_t i, j
    cdef double s
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    for i in range(n):
        s = 0.0
        for j in range(d):
            s += X[i, j] * X[i, j]
        o[i] = sqrt(s)
    return out
