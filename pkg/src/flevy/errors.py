"""Exception types shared across the package.

The CLI maps these onto its exit-code contract: configuration and
validation problems exit with 2, numerical failures with 3.
"""


class FlevyError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(FlevyError, ValueError):
    """Invalid parameters, malformed configuration, or contract violations."""


class GridSizeError(ConfigError):
    """A requested grid exceeds the configured cell budget."""


class GridMismatchError(ConfigError):
    """Two gridded paths that must share (t0, dt, length) do not."""


class NumericalError(FlevyError, RuntimeError):
    """Quadrature non-convergence, overflow guards, or diagnostic failures."""
