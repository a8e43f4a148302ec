"""Exception hierarchy shared across the toolkit.

The CLI maps these onto its exit-code contract: DataError -> 2,
NumericalError -> 3, ValidationError -> 4.
"""


class JdpinnError(Exception):
    """Base class for all toolkit errors."""


class DataError(JdpinnError):
    """Malformed or inconsistent input data (CSV rows, parameter files)."""


class NumericalError(JdpinnError):
    """A numerical procedure failed (divergence, non-finite values, bad config)."""


class ValidationError(JdpinnError):
    """A cross-solver validation threshold was breached."""
