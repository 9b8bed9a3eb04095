"""Exception types shared across the package."""


class ExmoError(Exception):
    """Base class for package-specific errors."""


class ShapeError(ExmoError, ValueError):
    """An array argument has an incompatible shape or channel count."""


class IngestionError(ExmoError):
    """A video frame or dataset file could not be read."""


class FormatError(ExmoError):
    """A serialized model file is malformed; message names the byte offset."""


class ValidationError(ExmoError, ValueError):
    """Structured input (SSQ responses, report pairing) failed validation."""


class TrainingError(ExmoError):
    """Training aborted; carries a reference to the last good checkpoint."""

    def __init__(self, message, checkpoint_path=None):
        super().__init__(message)
        self.checkpoint_path = checkpoint_path
