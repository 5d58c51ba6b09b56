"""Exception types shared across the toolkit."""


class H2MapError(Exception):
    """Base class for all toolkit errors."""


class RasterFormatError(H2MapError):
    """Malformed raster file (bad header line, cell count mismatch, bad magic)."""


class GridAlignmentError(H2MapError):
    """Two rasters that must share a grid geometry do not."""


class GeometryError(H2MapError):
    """Invalid polygon ring or boundary feature."""


class InputError(H2MapError):
    """Physically invalid input data (negative irradiance, bad power curve)."""


class DataQualityError(H2MapError):
    """Source series unusable (gaps too long, non-monotone timestamps)."""


class ConfigError(H2MapError):
    """Invalid run configuration value."""


class UndefinedCostError(H2MapError):
    """A levelized cost is undefined (zero annual output)."""


class InfeasibleTargetError(H2MapError):
    """Hydrogen target exceeds what the capacity ceilings can deliver."""

    def __init__(self, message: str, max_h2_kg: float = 0.0, binding: str = ""):
        super().__init__(message)
        self.max_h2_kg = max_h2_kg
        self.binding = binding


class StageError(H2MapError):
    """A pipeline stage failed; carries the stage name."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"stage '{stage}' failed: {message}")
        self.stage = stage
