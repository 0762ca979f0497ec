"""Exception hierarchy shared by all modules."""


class GelfandTodaError(Exception):
    """Base class for every error raised by the package."""


class FieldError(GelfandTodaError, ValueError):
    """Invalid coefficient-field operation (base mismatch, zero divisor, order underflow)."""


class VanishingInvariantError(GelfandTodaError, ArithmeticError):
    """A Laplace invariant vanished, so the sequence cannot be continued."""

    def __init__(self, message: str, step: int):
        super().__init__(message)
        self.step = step


class ContourError(GelfandTodaError, ValueError):
    """The integration path cannot be built or comes too close to a branch point."""


class QuadratureError(GelfandTodaError, ArithmeticError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class ParameterError(GelfandTodaError, ValueError):
    """Invalid parameters, configuration points, or operator indices."""


class LadderError(GelfandTodaError, ArithmeticError):
    """A ladder relation failed its spot check or hit a zero denominator."""


class DegenerateCycleError(GelfandTodaError, ArithmeticError):
    """The integral over the chosen cycle is indistinguishable from zero."""
