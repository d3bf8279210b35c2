"""Exception types raised by the sparsepc library.

All inherit from :class:`SparsePcError` (itself a ``ValueError``) so callers
can catch the whole family or rely on standard exception handling.
"""


class SparsePcError(ValueError):
    """Base class for all sparsepc errors."""


class EmptyMatrix(SparsePcError):
    """Matrix has too few rows or columns for the operation."""


class NotCentered(SparsePcError):
    """Operation requires a mean-centered data matrix."""


class ZeroMatrix(SparsePcError):
    """Matrix is identically zero; no dominant eigenpair exists."""


class DimensionTooLarge(SparsePcError):
    """Matrix exceeds the size limit of the exact (oracle-scale) solver."""


class IndexOutOfRange(SparsePcError):
    """Variable index outside ``[0, p)``."""


class NormViolation(SparsePcError):
    """Vector expected to have unit Euclidean norm does not."""


class DegenerateSpectrum(SparsePcError):
    """Repeated eigenvalues make the eigenvalue-identity ratio undefined."""


class NonPositiveEigenvalue(SparsePcError):
    """Leading eigenvalue must be strictly positive."""


class PowerIterationDegenerate(SparsePcError):
    """Power iteration produced a degenerate (zero) principal vector."""


class RankExhausted(SparsePcError):
    """Residual matrix is numerically zero before the requested number of
    components was produced."""


class ZeroAfterTruncation(SparsePcError):
    """Cardinality truncation produced the zero vector."""


class TooFewSamples(SparsePcError):
    """Not enough samples for the requested number of folds."""


class AllCellsFailed(SparsePcError):
    """Every candidate in a cross-validation grid failed to fit."""


class InvalidBlock(SparsePcError):
    """Block-covariance parameters violate positive definiteness."""


class NotPD(SparsePcError):
    """Matrix is not positive definite within the pivot tolerance."""


class UndefinedMetric(SparsePcError):
    """A classification-metric denominator is zero."""
