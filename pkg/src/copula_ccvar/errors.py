"""Exception types raised across the package."""


class CopulaError(Exception):
    """Base class for all package errors."""


class DomainError(CopulaError, ValueError):
    """An argument lies outside the domain of the function."""


class ParameterError(CopulaError, ValueError):
    """A copula or model parameter lies outside its admissible range."""


class CopulaOverflowError(CopulaError, OverflowError):
    """A closed-form evaluation left the representable floating point range."""


class UnattainableTauError(CopulaError, ValueError):
    """Kendall's tau cannot be produced by the requested family."""


class OrderingError(CopulaError, ValueError):
    """Arguments violate a required ordering (e.g. beta < t)."""


class DegenerateDenominatorError(CopulaError, ArithmeticError):
    """The conditioning event has (numerically) zero probability."""


class NonIntegrableError(CopulaError, ArithmeticError):
    """Adaptive quadrature could not meet its tolerance budget."""


class InsufficientAcceptanceError(CopulaError, RuntimeError):
    """Too few Monte-Carlo samples landed in the conditioning set."""


class EmptyExceedanceError(CopulaError, RuntimeError):
    """No sample exceeds the empirical VaR."""


class NonConvergenceError(CopulaError, RuntimeError):
    """An optimizer failed to converge; ``best`` holds the best iterate."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class StationarityError(CopulaError, ValueError):
    """Fitted GARCH parameters sit on the non-stationary boundary."""


class StateError(CopulaError, RuntimeError):
    """A model lacks the state needed for filtering or forecasting."""


class BoundaryWarning(UserWarning):
    """A fitted parameter landed at the edge of its admissible range."""


class NonFiniteDensityError(CopulaError, ArithmeticError):
    """A panel row sits on a singularity of the copula density."""
