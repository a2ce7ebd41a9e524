"""Exception types shared across the pipeline."""


class PushDetectError(Exception):
    """Base class for all pipeline errors."""


class ClipFormatError(PushDetectError):
    """A wire-format record is malformed. Carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SequencingError(PushDetectError):
    """Frames arrived out of order (frame index or timestamp went backwards)."""


class DegenerateGeometryError(PushDetectError):
    """An angle was requested on zero-length vectors (coincident points)."""


class TrainingError(PushDetectError):
    """Training data cannot produce a classifier (e.g. only one class present)."""


class ModelFormatError(PushDetectError):
    """A serialized model is corrupt, inconsistent, or of an unknown version."""


class SplitError(PushDetectError):
    """A dataset split cannot be performed as requested."""


class ConfigError(PushDetectError):
    """A configuration file or flag combination is invalid."""
