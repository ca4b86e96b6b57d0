"""Exception hierarchy shared across the package."""


class CamScoreError(Exception):
    """Base class for all camscore errors."""


class ShapeMismatchError(CamScoreError):
    """Operands or inputs have incompatible shapes."""


class NumericError(CamScoreError):
    """A value or result is non-finite (NaN or infinity)."""


class CapabilityError(CamScoreError):
    """The backend does not support the requested operation."""


class WeightFormatError(CamScoreError):
    """A weight file is malformed, truncated, or of an unknown version."""


class PipelineError(CamScoreError):
    """A batch run could not produce any usable result."""
