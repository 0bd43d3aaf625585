class LaaksoError(ValueError):
    """Base class for precondition failures in this package."""


class ResolutionError(LaaksoError):
    """Address resolution is too coarse (or too fine) for the requested operation."""


class ResolutionMismatchError(LaaksoError):
    """Two points live at different resolutions N."""


class RadiusError(LaaksoError):
    pass


class GridError(LaaksoError):
    pass


class DegenerateInputError(LaaksoError):
    """Operation needs two distinct points."""


class DomainError(LaaksoError):
    """A height step left [0, 1]."""


class EmptySampleError(LaaksoError):
    """Rejection sampling into a ball exhausted its attempt budget."""


class ParameterOrderError(LaaksoError):
    pass


class CaseError(LaaksoError):
    """A rectangle pair does not satisfy its declared case."""
