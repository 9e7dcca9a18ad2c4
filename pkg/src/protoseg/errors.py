"""Exception taxonomy shared across the package.

The CLI maps these onto process exit codes: configuration problems exit
with 2, data problems with 3 and numerical failures with 4.
"""


class ProtosegError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(ProtosegError):
    """Invalid or inconsistent configuration (unknown key, bad value)."""


class DataError(ProtosegError):
    """Broken dataset content: missing mask, out-of-range class id, size mismatch."""


class DimensionError(ProtosegError):
    """Tensor shapes incompatible with the requested operation."""


class NumericalError(ProtosegError):
    """Non-finite values or a failed numerical contract."""


class TapeError(ProtosegError):
    """Misuse of the autodiff tape, e.g. replaying it twice."""


class UndefinedMetricError(ProtosegError):
    """A metric or statistic has no defined value on the given input."""
