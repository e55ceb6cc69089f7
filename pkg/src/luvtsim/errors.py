"""Exception hierarchy for the simulator and dataset pipeline."""


class LuvtsimError(Exception):
    """Base class for all package errors."""


class InvalidMaterialError(LuvtsimError):
    """Material constants violate isotropic elasticity constraints."""


class InvalidResolutionError(LuvtsimError):
    """Grid spacing incompatible with the specimen extents."""


class PlacementError(LuvtsimError):
    """Defect geometry does not fit inside the allowed region."""


class ConfigurationError(LuvtsimError):
    """Invalid run configuration (bad value, unknown key, geometry clash)."""


class ConfigParseError(ConfigurationError):
    """Config file could not be parsed."""


class NumericalInstabilityError(LuvtsimError):
    """Wavefield blew up (NaN/Inf detected during time stepping)."""

    def __init__(self, step_index: int, message: str | None = None):
        self.step_index = step_index
        super().__init__(
            message or f"non-finite wavefield detected at step {step_index}"
        )


class NoArrivalError(LuvtsimError):
    """Trace never crossed the picking threshold (identically zero)."""


class ImageWriteError(LuvtsimError):
    """Image file could not be written."""
