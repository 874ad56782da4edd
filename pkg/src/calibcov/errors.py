"""Exception types shared across the library."""


class CalibcovError(Exception):
    """Base class for all library errors."""


class FactorizationFailure(CalibcovError):
    """Cholesky factorization hit a non-positive pivot (non-PSD input upstream)."""


class InvalidConfidence(CalibcovError):
    """Confidence parameter delta outside (0, 1]."""


class SampleTooSmall(CalibcovError):
    """Sample size insufficient for the requested batch schedule."""


class DegenerateInput(CalibcovError):
    """Zero or otherwise degenerate matrix where a nonzero one is required."""


class InvalidRange(CalibcovError):
    """Malformed parameter range (e.g. theta_min > theta_max)."""


class InvalidEpsilon(CalibcovError):
    """Accuracy parameter outside the admissible range."""


class InvalidSpec(CalibcovError):
    """Malformed distribution specification."""


class DataError(CalibcovError):
    """Malformed input data (CSV parse failure, dimension mismatch)."""
