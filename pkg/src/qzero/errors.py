class QZeroError(Exception):
    pass


class DomainError(QZeroError, ValueError):
    """An argument lies outside the domain of the operation."""


class UnsupportedRegime(QZeroError):
    """Parameters fall in a regime with no closed form implemented."""


class ConvergenceError(QZeroError, ArithmeticError):
    """An iterative procedure stopped before reaching its tolerance."""


class PrecisionError(QZeroError):
    """The working precision is too low for the requested evaluation."""
