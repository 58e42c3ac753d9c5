"""Exception types shared across the package."""


class PathcorError(Exception):
    """Base class for package-specific errors."""


class DataError(PathcorError):
    """Invalid input data or parameters."""


class NumericalError(PathcorError):
    """A computation failed for numerical reasons, e.g. a singular
    covariance block.  Messages carry a condition-number diagnostic
    where one is available."""


class ConstraintModeError(PathcorError):
    """An operation was called under the wrong normalization mode."""
