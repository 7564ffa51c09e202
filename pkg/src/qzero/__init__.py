"""Orthogonal polynomials on the q-lattice, their scaled zeros and the
constrained equilibrium measures that describe them."""

__version__ = "0.1.0"

from .errors import ConvergenceError, DomainError, PrecisionError, QZeroError, UnsupportedRegime  # noqa: E402
from .qnum import PrecisionContext  # noqa: E402

__all__ = [
    "ConvergenceError",
    "DomainError",
    "PrecisionContext",
    "PrecisionError",
    "QZeroError",
    "UnsupportedRegime",
    "__version__",
]
