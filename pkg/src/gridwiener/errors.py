"""Exception hierarchy.

Every error carries a short ``category`` string; the command-line front end
prefixes messages with it and maps it to an exit status.
"""


class GridWienerError(Exception):
    category = "error"


class CaseError(GridWienerError, ValueError):
    """Malformed or invalid case data (parse or validation failure)."""

    category = "case"


class InstabilityError(GridWienerError):
    category = "instability"

    def __init__(self, spectral_radius, message=None):
        self.spectral_radius = spectral_radius
        super().__init__(
            message
            or f"companion spectral radius {spectral_radius:.12g} is not below 1"
        )


class SimulationOverflowError(GridWienerError, ArithmeticError):
    category = "overflow"


class LagTooLargeError(GridWienerError, ValueError):
    category = "estimation"


class SingularSystemError(GridWienerError, ArithmeticError):
    category = "estimation"


class DimensionError(GridWienerError, ValueError):
    category = "estimation"


class MissingResponseError(GridWienerError, KeyError):
    category = "topology"


class NodeSetMismatchError(GridWienerError, ValueError):
    category = "topology"


class PanelFormatError(GridWienerError, ValueError):
    category = "io"


class ConfigError(GridWienerError, ValueError):
    category = "config"
