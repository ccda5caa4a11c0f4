"""Exception taxonomy shared across the library and the CLI.

Argument errors (dimension mismatches, out-of-range scalars) use the built-in
ValueError. Everything that maps to a CLI exit code gets its own class:
ConfigError -> 2, NumericError / DataError -> 3, CheckFailure -> 1.
"""


class GvaError(Exception):
    """Base class for library-specific failures."""


class ConfigError(GvaError):
    """Invalid or unknown configuration input."""


class NumericError(GvaError):
    """Numeric breakdown: non-convergence, singular pivot, overflow."""


class DataError(GvaError):
    """Malformed or unusable experiment data."""


class ValidationError(GvaError):
    """A stated precondition of a check was violated."""


class CheckFailure(GvaError):
    """An experiment assertion failed; message carries both sides."""
