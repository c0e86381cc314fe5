"""Exception types shared across the package and mapped to CLI exit codes."""


class GrainspectError(Exception):
    """Base class for all grainspect errors."""


class DataError(GrainspectError):
    """Unreadable, malformed, or inconsistent input data (exit code 2)."""


class NumericalError(GrainspectError):
    """Numerical failure such as a non-PD covariance (exit code 3)."""
