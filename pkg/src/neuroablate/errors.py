"""Exception types shared across the package."""


class NeuroAblateError(Exception):
    """Base class for all package errors."""


class ConfigError(NeuroAblateError, ValueError):
    """Invalid configuration value."""


class ArityError(NeuroAblateError, ValueError):
    """Vector or matrix dimensions do not match the network topology."""


class DataError(NeuroAblateError, ValueError):
    """Malformed or unusable dataset."""


class DivergenceError(NeuroAblateError, ArithmeticError):
    """Training produced non-finite or exploding weights."""

    def __init__(self, epoch, message=None):
        self.epoch = epoch
        super().__init__(message or f"divergence at epoch {epoch}")


class NotReachedError(NeuroAblateError):
    """A learning curve never reached the requested error threshold."""

    def __init__(self, which):
        self.which = tuple(which)
        super().__init__("threshold not reached by: " + ", ".join(self.which))
