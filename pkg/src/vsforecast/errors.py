"""Exception types shared across the package."""


class VSFError(Exception):
    """Base class for library-specific failures."""


class ParseError(VSFError):
    """A cell of an input file could not be parsed.

    ``row`` and ``col`` are 1-based file coordinates when known.
    """

    def __init__(self, message, row=None, col=None):
        super().__init__(message)
        self.row = row
        self.col = col


class EmptyInputError(VSFError):
    """The input contains no rows or no columns."""


class TooShortError(VSFError):
    """A series or split is too short for the requested windowing."""


class DegenerateSeriesError(VSFError):
    """All values are identical, so no normalizer can be fitted."""


class ShapeMismatchError(VSFError):
    """Tensor or matrix shapes are inconsistent with the operation."""


class CorpusTooSmallError(VSFError):
    """The retrieval corpus holds fewer instances than required."""


class NoClustersError(VSFError):
    """Clustering produced no clusters, so correlated sampling is impossible."""


class RetrievalExhaustedError(VSFError):
    """Range retrieval found no candidates within the round budget."""


class ZeroOracleError(VSFError):
    """Relative error deltas are undefined for a zero oracle error."""


class UnsupportedSchemeError(VSFError):
    """The requested weighting scheme does not support this operation."""


class SingularSystemError(VSFError):
    """An unregularized least-squares system is rank deficient."""


class ConfigError(VSFError):
    """A run configuration is invalid or contains unknown keys."""
