"""Exception types raised by deconvpath."""


class DeconvError(ValueError):
    """Base class for every error deconvpath raises on bad input or failed numerics."""


class GridError(DeconvError):
    pass


class OperatorError(DeconvError):
    pass


class ObjectiveError(DeconvError):
    pass


class ProxError(DeconvError):
    pass


class SolverError(DeconvError):
    pass


class LineSearchError(SolverError):
    """Raised when the Wolfe line search cannot bracket a step.

    Attributes:
        best: the best iterate seen before the failure.
        best_value: objective value at ``best``.
    """

    def __init__(self, message, best=None, best_value=None):
        super().__init__(message)
        self.best = best
        self.best_value = best_value


class AdmmDivergedError(SolverError):
    pass


class PathError(DeconvError):
    pass


class SelectionError(DeconvError):
    pass


class SimulationError(DeconvError):
    pass


class InputError(DeconvError):
    """Unreadable or malformed input file; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line


class UsageError(DeconvError):
    pass
