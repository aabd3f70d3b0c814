"""Exception hierarchy shared by all modules."""


class RotorError(Exception):
    """Base class for every error raised by the package."""


class ConfigurationError(RotorError, ValueError):
    pass


class PrecisionError(RotorError):
    pass


class DimensionError(RotorError, ValueError):
    pass


class BasisError(RotorError):
    pass


class NumericalError(RotorError, ArithmeticError):
    pass


class InsufficientDataError(RotorError, ValueError):
    pass


class RegimeError(RotorError):
    """A fit was asked of data that does not show the requested regime."""


class WindowError(RotorError, ValueError):
    pass


class FitDomainError(RotorError, ValueError):
    """Nonpositive samples where a logarithmic representation is needed."""

    def __init__(self, message, offending=()):
        super().__init__(message)
        self.offending = list(offending)
