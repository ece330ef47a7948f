"""Exception types shared across the package."""


class DunklSimError(Exception):
    """Base class for errors raised by this package."""


class DimensionError(DunklSimError, ValueError):
    """Shape or dimension of an input does not match the root system."""


class ChamberError(DunklSimError, ValueError):
    """A point that must lie strictly inside the Weyl chamber does not."""


class ParameterError(DunklSimError, ValueError):
    """A numeric parameter is outside its admissible range."""


class GridError(DunklSimError, ValueError):
    """Time grids or lags are incompatible (nesting, divisibility)."""


class SolverError(DunklSimError, RuntimeError):
    """An implicit step solver failed to certify a solution.

    Carries the best iterate found so callers can diagnose the failure.
    """

    def __init__(self, message, best=None, residual=None, iterations=None):
        super().__init__(message)
        self.best = best
        self.residual = residual
        self.iterations = iterations


class PathSolverError(SolverError):
    """Solver failure inside a path simulation; records where it happened."""

    def __init__(self, message, step=None, path_ids=None, **kw):
        super().__init__(message, **kw)
        self.step = step
        self.path_ids = path_ids


class FitError(DunklSimError, ValueError):
    """Not enough usable points for a regression fit."""


class ConfigError(DunklSimError, ValueError):
    """Configuration file rejected; collects every problem found."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
