"""Exception hierarchy shared by the engine, noise models and runner."""


class SimulationError(Exception):
    """Base class for every error raised by this package."""


class SizeError(SimulationError, ValueError):
    pass


class QubitIndexError(SimulationError, IndexError):
    pass


class ShapeError(SimulationError, ValueError):
    pass


class ChannelError(SimulationError, ValueError):
    pass


class ParameterError(SimulationError, ValueError):
    pass


class InputError(SimulationError, ValueError):
    pass


class SamplingError(SimulationError, ValueError):
    pass


class ConfigError(SimulationError, ValueError):
    """Invalid configuration; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(key, message)
        self.key = key
        self.message = message

    def __str__(self):
        return f"{self.key}: {self.message}"


class SweepError(SimulationError):
    """An engine failure while evaluating one sweep point."""

    def __init__(self, point: str, cause: Exception):
        super().__init__(point, cause)
        self.point = point
        self.cause = cause

    def __str__(self):
        return f"sweep point {self.point} failed: {self.cause}"
