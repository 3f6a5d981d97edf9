"""Exception and warning types shared across the package."""


class DimensionMismatchError(ValueError):
    """Coordinate vectors or matrices have incompatible shapes."""


class InvalidPointError(ValueError):
    """Coordinates violate the constraints of the target space."""


class CutLocusError(ValueError):
    """Logarithm requested at the cut locus, where no unique minimal geodesic exists."""


class NumericalError(RuntimeError):
    """A dense linear-algebra step failed beyond recovery."""


class ConvergenceError(RuntimeError):
    """An iterative solver stopped without reaching its tolerance."""

    def __init__(self, message, last_iterate=None, trace=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.trace = trace


class DataFormatError(ValueError):
    """A data file violates its documented format."""

    def __init__(self, message, path=None, line=None):
        if path is not None:
            prefix = f"{path}:{line}: " if line is not None else f"{path}: "
            message = prefix + message
        super().__init__(message)
        self.path = path
        self.line = line


class ConfigError(ValueError):
    """A run configuration is missing, malformed or inconsistent."""


class JitterWarning(UserWarning):
    """A nominally positive-definite matrix needed diagonal jitter to factorize."""
