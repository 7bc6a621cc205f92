"""Exception types shared across the package."""


class PredressError(Exception):
    """Base class for all package errors."""


class DemoFormatError(PredressError):
    """A demonstration file or record stream is malformed."""


class PreprocessError(PredressError):
    """A demonstration cannot be resampled or filtered as requested."""


class FitError(PredressError):
    """Model fitting rejected its input."""


class ModelFormatError(PredressError):
    """A serialized model file is malformed or has the wrong version."""


class RolloutError(PredressError):
    """Trajectory generation failed (divergence or step budget exhausted)."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class LimitViolation(PredressError):
    """A generated trajectory violates kinematic or distance constraints."""


class RegistryError(PredressError):
    """A primitive registry entry is missing, malformed, or inconsistent."""


class CalibrationError(PredressError):
    """A calibration table is malformed or out of range."""


class EstimatorError(PredressError):
    """A garment-state estimator failed to produce a usable reply."""


class ConfigError(PredressError):
    """An experiment configuration file is invalid."""
