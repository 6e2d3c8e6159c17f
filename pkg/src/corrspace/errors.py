"""Exception types shared across the package.

The CLI maps these to exit codes: ConfigError -> 2, DataError -> 3,
NumericalError -> 4.
"""


class CorrspaceError(Exception):
    """Base class for all package-specific failures."""


class ConfigError(CorrspaceError):
    """Invalid experiment configuration (bad method, missing seed, ...)."""


class DataError(CorrspaceError):
    """Bad input data: file format, alignment, validation failures."""


class NumericalError(CorrspaceError):
    """Non-finite values where finite numbers are required."""
