"""
LOFT v1.0 - Exceptions
One hierarchy for every failure the library raises on purpose.
"""


class LoftError(Exception):
    """Base class for all LOFT errors."""


class ChannelError(LoftError):
    """Degenerate link geometry (zero transmitter/receiver or jammer distance)."""


class GraphError(LoftError):
    """A lifetime graph cannot be built for the requested edge set."""


class SpectralError(LoftError):
    """Invalid input to the eigen solver or the Cheeger enumeration."""


class ConstraintError(LoftError):
    """A placement violates the altitude corridor or the safety distance."""


class ScenarioGenerationError(LoftError):
    """Random scenario generation gave up."""


class ConfigError(LoftError):
    """Invalid configuration value; ``field`` is the dotted config key."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message
