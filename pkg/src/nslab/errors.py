"""Exception types raised across the package."""


class NSLabError(Exception):
    """Base class for all package errors."""


class DegenerateAxis(NSLabError, ValueError):
    pass


class AnchorOutOfRange(NSLabError, IndexError):
    pass


class GridMismatch(NSLabError, ValueError):
    pass


class InvalidIndex(NSLabError, ValueError):
    pass


class InvalidMeasure(NSLabError, ValueError):
    pass


class DegenerateBudget(NSLabError, ValueError):
    pass


class InvalidSide(NSLabError, ValueError):
    pass


class InvalidMargin(NSLabError, ValueError):
    pass


class ConfigError(NSLabError, ValueError):
    """Bad run configuration. ``key`` names the offending setting."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


class SolverFailure(NSLabError, RuntimeError):
    """Carries the partial state and report of a failed solve."""

    def __init__(self, message, state=None, report=None):
        super().__init__(message)
        self.state = state
        self.report = report


class MaxIterExceeded(SolverFailure):
    pass


class Divergence(SolverFailure):
    pass
