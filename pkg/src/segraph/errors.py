"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: UsageError -> 2, DataError -> 3,
NumericalError -> 4.
"""


class SegraphError(Exception):
    """Base class for all package errors."""


class UsageError(SegraphError):
    """Invalid arguments or configuration."""


class DataError(SegraphError):
    """Malformed or inadmissible input data."""


class NumericalError(SegraphError):
    """A numerical procedure failed (infeasible LP, non-PD matrix, ...)."""
