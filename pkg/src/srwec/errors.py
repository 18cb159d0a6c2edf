"""Exception hierarchy shared across the toolkit.

Two broad failure families matter to callers: bad input (configuration,
data files, infeasible geometry) and numerical breakdown during a solve.
The CLI maps them to distinct exit codes, so library code should raise
the most specific class that applies.
"""


class SrwecError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(SrwecError, ValueError):
    """Invalid configuration, parameters, or arguments."""


class DataFormatError(ValidationError):
    """Malformed input data file (resource files, tilt series, configs)."""


class NumericError(SrwecError, RuntimeError):
    """A numerical procedure failed: instability, ill-conditioning, NaN."""
