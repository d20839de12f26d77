"""Exception hierarchy shared across the package.

The CLI maps these onto its exit-code contract: ConfigError -> 1,
FormatError and OS-level failures -> 2, TrainingError/ScoringError -> 3.
"""


class RaadError(Exception):
    """Base class for all package errors."""


class ConfigError(RaadError):
    """Invalid configuration value or malformed input argument."""


class DimensionError(RaadError):
    """Shapes or dimensions that do not line up."""


class FormatError(RaadError):
    """Corrupt or invalid on-disk artifact (feature file, checkpoint, manifest)."""


class TrainingError(RaadError):
    """Numerical failure during optimization (non-finite loss or gradient)."""


class ScoringError(RaadError):
    """Numerical failure while scoring a sample."""
