class ConfigError(ValueError):
    """Invalid configuration or scenario. ``path`` names the offending field."""

    def __init__(self, message, path=None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class DomainError(ValueError):
    """Input outside the domain of a numeric model."""


class InfeasibleError(DomainError):
    pass


class SizeError(ValueError):
    """Problem instance too large for exhaustive search."""
