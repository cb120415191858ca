class QleakError(Exception):
    """Base class of the errors the command line maps onto exit codes."""
    exit_code = 1


class ConfigError(QleakError, ValueError):
    """Invalid or inconsistent run configuration."""
    exit_code = 2


class DataError(QleakError, ValueError):
    """Unreadable, malformed or missing data artifacts."""
    exit_code = 3


class InvariantError(QleakError, RuntimeError):
    """A numerical or bookkeeping invariant was violated."""
    exit_code = 4
