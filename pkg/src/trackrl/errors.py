"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration or incompatible shapes detected at setup time."""


class UsageError(RuntimeError):
    """An operation was called in a state that does not support it."""


class TrainingError(RuntimeError):
    """Training produced a non-finite signal; carries a diagnostic message."""
