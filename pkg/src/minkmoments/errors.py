"""Exception types shared across the package."""


class MinkMomentsError(Exception):
    """Base class for package errors."""


class ResourceLimitError(MinkMomentsError):
    """A requested block would exceed the configured memory budget."""


class NonConvergenceError(MinkMomentsError):
    """Fixed-point iteration hit its cap before meeting the threshold.

    The best iterate is attached as ``result`` so callers can still inspect it.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class PrecisionError(MinkMomentsError):
    """Working precision cannot cover the error amplification of a computation."""


class RankDeficiencyError(MinkMomentsError):
    """Least-squares basis is numerically collinear."""


class CheckpointError(MinkMomentsError):
    """Malformed or incompatible checkpoint document."""


class CancellationWarning(UserWarning):
    """Alternating sum lost more digits to cancellation than the guard digits cover."""
