"""Exception types shared across the package.

The CLI maps ConfigError to exit code 1 and NumericalError to exit code 2.
"""


class FowtFatError(Exception):
    """Base class for all package errors."""


class ConfigError(FowtFatError):
    """Invalid configuration, input file, or schema mismatch."""


class SchemaError(ConfigError):
    """A structured file does not match its documented schema."""


class NumericalError(FowtFatError):
    """A numerical procedure failed (singular system, non-convergence, ...)."""


class ConvergenceError(NumericalError):
    """An iterative scheme exhausted its iteration budget."""


class SingularSystemError(NumericalError):
    """The frequency-domain system matrix is singular at some frequency."""
