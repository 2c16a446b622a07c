"""Exception types shared across the toolkit."""


class ConfigError(ValueError):
    """Invalid experiment or training configuration."""


class IdxParseError(ValueError):
    """Malformed IDX file. Carries the byte offset where parsing failed."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class TrainingError(RuntimeError):
    """Training diverged (non-finite loss). Carries the failing epoch."""

    def __init__(self, message: str, epoch: int):
        super().__init__(f"{message} (epoch {epoch})")
        self.epoch = epoch


class NumericalError(RuntimeError):
    """Non-finite values encountered during a forward/backward pass."""

    def __init__(self, message: str, layer_index: int | None = None):
        if layer_index is not None:
            message = f"{message} (layer index {layer_index})"
        super().__init__(message)
        self.layer_index = layer_index


class PreparedIOError(ValueError):
    """Corrupt, truncated, or version-incompatible prepared-variables file."""
