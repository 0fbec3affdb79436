"""Exception types shared across the package."""


class ConfigError(Exception):
    """Invalid configuration value or malformed input file."""


class SolverSizeError(Exception):
    """Exact solver instance exceeds the vertex-enumeration cap."""


class FilterNumericalError(Exception):
    """Kalman update failed on a non-positive-definite innovation matrix."""

    def __init__(self, message: str, t: int | None = None):
        self.message = message
        self.t = t
        if t is not None:
            message = f"{message} (at step t={t})"
        super().__init__(message)
