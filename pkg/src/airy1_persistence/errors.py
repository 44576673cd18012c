"""Exception types shared across the package."""


class Airy1Error(Exception):
    """Base class for all package errors."""


class ConfigurationError(Airy1Error, ValueError):
    """Invalid parameters or grid layout."""


class NonConvergence(Airy1Error, RuntimeError):
    """An iterative or adaptive procedure did not reach its tolerance."""


class PoleProximity(Airy1Error, ValueError):
    """Evaluation point too close to a jump point of the contour integrand."""

    def __init__(self, message, x=None, pole=None):
        super().__init__(message)
        self.x = x
        self.pole = pole


class NonReal(Airy1Error, ArithmeticError):
    """A quantity expected to be real carries a significant imaginary part."""


class KernelOverflow(Airy1Error, OverflowError):
    """A kernel entry exceeds the floating point range.

    Attributes
    ----------
    location : tuple or None
        Grid indices ``(i, j)`` of the first offending entry, when known.
    log_magnitude : float
        Natural log of the magnitude that could not be represented.
    """

    def __init__(self, message, location=None, log_magnitude=float("nan")):
        super().__init__(message)
        self.location = location
        self.log_magnitude = log_magnitude


class NonFinite(Airy1Error, FloatingPointError):
    """A matrix or factorization contains NaN or infinite values."""
