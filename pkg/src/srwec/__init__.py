"""Wave-to-wire simulation and design toolkit for a surface-riding
wave energy converter with a sliding permanent-magnet translator.

Subpackages cover the full chain: irregular sea synthesis (`spectra`),
buoy resource ingestion (`ndbc`), tube tilt and translator dynamics
(`dynamics`), power take-off control laws (`pto`), analytical generator
magnetics (`magnetics`), the three-phase electrical model (`circuit`),
deterministic parameter sweeps (`sweep`), and a command-line front end
(`cli`).
"""

from srwec.errors import DataFormatError, NumericError, SrwecError, ValidationError

__version__ = "0.1.0"

__all__ = [
    "DataFormatError",
    "NumericError",
    "SrwecError",
    "ValidationError",
    "__version__",
]
