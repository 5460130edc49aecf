"""Exception hierarchy shared across the package."""


class BearingAngleError(Exception):
    """Base class for all package errors."""


class ConfigurationError(BearingAngleError, ValueError):
    """Invalid camera, filter or scenario configuration."""


class ZeroSizeError(BearingAngleError, ValueError):
    """A bounding box or target with non-positive size."""


class NormalizationError(BearingAngleError, ValueError):
    """A vector expected to be unit-norm is not."""


class RangeEstimateError(BearingAngleError, ValueError):
    """Non-positive range estimate handed to the measurement builder."""


class NumericalFailure(BearingAngleError, ArithmeticError):
    """Filter produced non-finite numbers."""


class InsufficientWindowError(BearingAngleError, ValueError):
    """Observation window too short for the requested analysis."""


class UnderdeterminedError(InsufficientWindowError):
    """Fewer than n+2 observations for an order-n target."""


class UnobservableError(BearingAngleError):
    """Stacked system is rank deficient; carries the offending null direction."""

    def __init__(self, message, null_direction=None, singular_values=None):
        super().__init__(message)
        self.null_direction = null_direction
        self.singular_values = singular_values


class GuidanceSingularity(BearingAngleError, ArithmeticError):
    """Guidance law evaluated at zero range."""


class SchemaError(BearingAngleError, ValueError):
    """Malformed input table or configuration document."""
