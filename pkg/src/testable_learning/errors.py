"""Exception types raised across the package."""


class TLError(Exception):
    """Base class for all package errors."""


class DimensionError(TLError, ValueError):
    """Shapes or dimensions of two objects do not agree."""


class EmptySampleError(TLError, ValueError):
    pass


class EmptyClassError(TLError, ValueError):
    pass


class DomainTooLargeError(TLError, ValueError):
    """The finite domain cannot be enumerated at desk scale."""


class NormalizationError(TLError, ValueError):
    pass


class ProblemTooLargeError(TLError, ValueError):
    """An LP would exceed the configured size cap."""


class InfeasibleError(TLError, RuntimeError):
    pass


class SolverError(TLError, RuntimeError):
    """The LP backend failed for a reason other than infeasibility."""


class InvalidRegimeError(TLError, ValueError):
    pass
