"""Exception types shared across the package."""


class GupoptError(Exception):
    """Base class for all package-specific errors."""


class InvalidDimensionError(GupoptError, ValueError):
    """A Fock-space dimension is too small or otherwise unusable."""


class CutoffInsufficientError(GupoptError, ValueError):
    """A truncation cutoff cannot represent the requested state/operator.

    ``needed_dim`` carries the estimated dimension that would suffice.
    """

    def __init__(self, message, needed_dim=None):
        super().__init__(message)
        self.needed_dim = needed_dim


class OutOfRegimeError(GupoptError, ValueError):
    """A validity precondition of a closed-form result is violated.

    ``inequality`` names the violated condition, e.g. ``"lambda < 1"``.
    """

    def __init__(self, message, inequality=None):
        super().__init__(message)
        self.inequality = inequality


class NumericError(GupoptError, ValueError):
    """Non-finite input or a numerical routine failed to converge."""


class ConfigError(GupoptError, ValueError):
    """A run configuration failed validation."""
