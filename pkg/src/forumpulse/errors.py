"""Exception types shared across the toolkit."""


class ForumPulseError(Exception):
    """Base class for all toolkit errors."""


class DataError(ForumPulseError):
    """Input data cannot be analyzed: empty, missing, or inconsistent."""


class UsageError(ForumPulseError):
    """Invalid parameters or configuration supplied by the caller."""


class StageError(ForumPulseError):
    """A pipeline stage failed. Carries the stage name for error reporting."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
