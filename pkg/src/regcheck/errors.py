"""Exception types shared across the package."""


class RegcheckError(Exception):
    """Base class for all package-specific errors."""


class RankDeficient(RegcheckError):
    """Linear design matrix is not of full column rank."""


class NoConvergence(RegcheckError):
    """An iterative fit failed to produce a usable estimate."""


class ZeroVariance(RegcheckError):
    """A data column is constant and cannot be standardized."""


class SingularSigma(RegcheckError):
    """The empirical score second-moment matrix is not invertible."""


class SingularGram(RegcheckError):
    """The empirical Gram matrix of the score is not invertible."""


class DegenerateResponse(RegcheckError):
    """All response values are identical."""


class MissingColumn(RegcheckError):
    """A named column is absent from the input file."""


class NonNumericCell(RegcheckError):
    """A cell could not be parsed as a number; carries row/column info."""


class EmptyFile(RegcheckError):
    """The input file has no usable data rows."""


class ConfigInvalid(RegcheckError):
    """A simulation config failed validation; message names the field."""
