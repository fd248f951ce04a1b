"""Exception types raised across the package."""


class CthocsError(Exception):
    """Base class for all package errors."""


class ConfigurationError(CthocsError, ValueError):
    """Invalid parameters, out-of-range settings or inconsistent configs."""


class ShapeError(CthocsError, ValueError):
    """Array lengths or indices that do not fit together."""


class ClockMismatchError(CthocsError, ValueError):
    """Channel streams that were not sampled by the same nonuniform clock."""


class IncompleteInputError(CthocsError, KeyError):
    """A required moment, block signature or plan entry is missing."""

    def __str__(self):
        # KeyError quotes its argument; keep the message readable
        return str(self.args[0]) if self.args else ""


class UndefinedNMSEError(CthocsError, ZeroDivisionError):
    """NMSE requested against a zero-valued truth."""
