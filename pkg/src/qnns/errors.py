"""Exception hierarchy shared by every module."""


class QnnsError(Exception):
    """Base class for library errors."""


class DimensionMismatch(QnnsError, ValueError):
    pass


class DegenerateSimplex(QnnsError):
    """The simplex vertices are affinely dependent (within tolerance)."""


class DegenerateInput(QnnsError):
    """Fewer than d+1 affinely independent sites were supplied."""


class GeneralPositionViolation(QnnsError):
    """A cospherical or coplanar configuration could not be resolved.

    Callers may retry after jittering the input (see ``datasets.jitter``).
    """


class DuplicateSite(QnnsError):
    pass


class InfeasibleLevel(QnnsError):
    """Quantizer level exceeds the number of distinct data points."""
