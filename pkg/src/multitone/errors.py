"""Exception hierarchy.

Two families: :class:`ConfigurationError` for bad inputs (the CLI maps these
to exit status 2) and :class:`NumericalError` for singular or degenerate
numerics hit during estimation or theory evaluation (exit status 3).
"""


class MultitoneError(Exception):
    """Base class for all package errors."""


class ConfigurationError(MultitoneError, ValueError):
    """Invalid scenario, estimator configuration, or experiment file."""


class NumericalError(MultitoneError, ArithmeticError):
    """A formula was evaluated at or too close to a singular point."""


class DegenerateInterpolationError(NumericalError):
    """The two interpolation coefficients are identical, so h is undefined."""


class CoincidentFrequencyError(NumericalError):
    """Two components sit on the same frequency; the leakage quotient is singular."""


class UnresolvableComponentsError(NumericalError):
    """The coarse search assigned the same DFT bin to two components."""


class SingularityError(NumericalError):
    """A closed-form theoretical expression hit a pole (cos(pi*d) = 0, etc.)."""
