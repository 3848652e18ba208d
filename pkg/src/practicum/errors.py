"""Exception types shared across the package."""


class PracticumError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(PracticumError):
    """Invalid environment or experiment configuration."""


class CorpusError(PracticumError):
    """Demonstration data that cannot be bound to the current environment."""


class OracleError(PracticumError):
    """The scripted demonstrator failed to reach a commanded goal."""


class PlanningError(PracticumError):
    """Graph search could not produce a goal to command."""

    def __init__(self, message: str, from_id: int | None = None, to_id: int | None = None):
        super().__init__(message)
        self.from_id = from_id
        self.to_id = to_id


class TrainingDiverged(PracticumError):
    """A training loss became non-finite; carries the rescue checkpoint path if one was written."""

    def __init__(self, message: str, checkpoint_path: str | None = None):
        super().__init__(message)
        self.checkpoint_path = checkpoint_path
