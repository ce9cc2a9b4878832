"""Exception hierarchy shared across the package."""


class FracBesselError(Exception):
    """Base class for all package errors."""


class DomainError(FracBesselError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class InputError(FracBesselError, ValueError):
    """Inputs are inconsistent with each other or violate a precondition."""


class SizeError(InputError):
    """A grid is too large for the requested sampler."""


class FactorizationError(FracBesselError, ArithmeticError):
    """A covariance matrix could not be factorized."""


class EmbeddingError(FracBesselError, ArithmeticError):
    """The circulant embedding produced significantly negative eigenvalues."""


class NumericError(FracBesselError, ArithmeticError):
    """A non-finite value appeared while integrating a path."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class ConfigError(FracBesselError, ValueError):
    """A run configuration is malformed; ``field`` names the offending key."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
