"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration value or combination (CLI exit code 2)."""


class StageFailure(RuntimeError):
    """A pipeline stage failed; carries the stage name (CLI exit code 3)."""

    def __init__(self, stage, cause):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


class ParseError(ValueError):
    """Base class for container / model file parse failures."""


class BadMagicError(ParseError):
    pass


class TruncatedPayloadError(ParseError):
    pass


class ShapeMismatchError(ParseError):
    pass
