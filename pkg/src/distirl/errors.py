"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Inconsistent dimensions, invalid gains or malformed configuration."""


class SimulationDiverged(RuntimeError):
    """A state left the configured blow-up bound or became non-finite."""

    def __init__(self, message, t=None):
        super().__init__(message if t is None else f"{message} (t={t:.6g})")
        self.t = t


class ConditioningError(RuntimeError):
    """A least-squares gain matrix lost positive definiteness."""

    def __init__(self, message, t=None):
        super().__init__(message if t is None else f"{message} (t={t:.6g})")
        self.t = t
