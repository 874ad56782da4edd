"""Backend selection for the hot kernels.

The compiled extension is preferred when it imported cleanly; set
``CALIBCOV_BACKEND=python`` (or ``compiled``) to force a choice.  The two
backends agree to floating-point roundoff; each one is individually
deterministic, which is what the reproducibility contract requires.
"""

import os

from . import _kernels_py

try:
    from . import _accel

    _HAVE_ACCEL = True
except ImportError:  # pragma: no cover - depends on the build
    _accel = None
    _HAVE_ACCEL = False


def _pick():
    forced = os.environ.get("CALIBCOV_BACKEND", "").strip().lower()
    if forced == "python":
        return _kernels_py, "python"
    if forced == "compiled":
        if not _HAVE_ACCEL:
            raise ImportError(
                "CALIBCOV_BACKEND=compiled but the _accel extension is unavailable"
            )
        return _accel, "compiled"
    if _HAVE_ACCEL:
        return _accel, "compiled"
    return _kernels_py, "python"


_impl, _backend_name = _pick()


def backend_name():
    """Name of the active kernel backend: 'compiled' or 'python'."""
    return _backend_name


def get_backend(name):
    """Return the kernel module for an explicit backend name."""
    if name == "python":
        return _kernels_py
    if name == "compiled":
        if not _HAVE_ACCEL:
            raise ImportError("compiled backend unavailable")
        return _accel
    raise ValueError(f"unknown backend {name!r}")


def whiten_norms(R, X):
    """Norms of R^{-1} x_i over the rows of X (R lower-triangular)."""
    return _impl.whiten_norms(R, X)


def weighted_outer_mean(X, w):
    """(1/n) sum_i w_i x_i x_i^T with a deterministic reduction order."""
    return _impl.weighted_outer_mean(X, w)


def row_norms(X):
    """Euclidean norm of every row of X."""
    return _impl.row_norms(X)
