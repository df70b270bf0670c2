"""Exception classes shared across the package."""


class SphereflowError(Exception):
    """Base class for all sphereflow errors."""


class InputError(SphereflowError):
    """A file or payload could not be read or is malformed."""


class ConfigError(SphereflowError):
    """Invalid configuration or argument values."""


class NumericError(SphereflowError):
    """A numerical routine failed to produce a usable result."""


class SingularPointError(NumericError):
    """Projection evaluated at its singular point (z = 1)."""


class BehindPlaneError(NumericError):
    """Gnomonic forward projection of a point behind the tangent plane."""


class DimensionMismatchError(ConfigError):
    """Operands have incompatible raster dimensions."""


class InvalidDensityError(ConfigError):
    """Distortion density map has entries >= 1."""


class FloMagicError(InputError):
    """Flow file does not start with the float sentinel tag."""


class FloTruncatedError(InputError):
    """Flow file payload shorter or longer than the header promises."""


class FloDimensionError(InputError):
    """Flow file header carries nonpositive or absurd dimensions."""


class BackendError(NumericError):
    """A per-patch flow backend failed."""

    def __init__(self, patch_index, message):
        super().__init__(f"patch {patch_index}: {message}")
        self.patch_index = patch_index
