"""Exception types raised across the package."""


class GpsprError(Exception):
    """Base class for all package errors."""


class ConfigurationError(GpsprError, ValueError):
    """Invalid parameter or inconsistent algorithm/prior/ensemble combination."""


class DimensionError(GpsprError, ValueError):
    pass


class NotPositiveDefiniteError(GpsprError, ArithmeticError):
    pass


class FactorizationError(GpsprError, ArithmeticError):
    """A graph-projection factorization could not be built."""


class BreakdownError(GpsprError, ArithmeticError):
    """Conjugate gradient hit a zero-curvature search direction."""


class ConvergenceError(GpsprError, ArithmeticError):
    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class PhaseUndefinedError(GpsprError, ValueError):
    """A reference vector has zero entries, so its phase is undefined."""


class FileFormatError(GpsprError):
    pass


class MagicMismatchError(FileFormatError):
    pass


class TruncatedPayloadError(FileFormatError):
    pass
