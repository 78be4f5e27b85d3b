"""Exception types raised by the simulator."""

import numpy as np


class DimensionError(ValueError):
    """Array lengths or shapes do not agree."""


class ParameterError(ValueError):
    """A scalar parameter is outside its valid range."""


class DegenerateChannelError(ValueError):
    """A channel row or gain profile is identically zero."""


class SingularityError(np.linalg.LinAlgError):
    """A matrix that must be inverted is (numerically) singular."""


class AllocationError(ValueError):
    """Power allocation has no active subcarrier to pour into."""


class ConfigError(ValueError):
    """Invalid simulation configuration; ``field`` names the culprit."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
