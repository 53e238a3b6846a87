"""Exception hierarchy shared by every module."""


class ScatteringLabError(Exception):
    """Base class for all errors raised by this package."""


class NonFiniteError(ScatteringLabError, ValueError):
    pass


class ComponentMismatchError(ScatteringLabError, ValueError):
    pass


class GridMismatchError(ScatteringLabError, ValueError):
    pass


class UnsupportedCombinationError(ScatteringLabError, ValueError):
    pass


class EmptyIntervalError(ScatteringLabError, ValueError):
    pass


class DivergedError(ScatteringLabError, FloatingPointError):
    """Raised when an evolution produces non-finite values.

    ``last_time`` is the last time node at which the state was finite.
    """

    def __init__(self, message, last_time):
        super().__init__(f"{message} (last finite time t={last_time:.6g})")
        self.last_time = last_time


class TaintedResultError(ScatteringLabError):
    """Numerical result contaminated by an artefact of the discretization.

    The offending diagnostics travel with the exception so callers can still
    report them.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class PartitionInfeasibleError(ScatteringLabError):
    pass


class InconclusiveError(ScatteringLabError):
    pass


class OutOfRadiusError(ScatteringLabError, ValueError):
    def __init__(self, eps, radius):
        super().__init__(
            f"epsilon={eps:.4g} lies outside the estimated radius of convergence "
            f"{radius:.4g}; pass force=True to sum anyway"
        )
        self.eps = eps
        self.radius = radius


class ConfigError(ScatteringLabError, ValueError):
    pass
