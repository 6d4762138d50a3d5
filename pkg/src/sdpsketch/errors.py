"""Exception types shared across the package."""


class SdpSketchError(Exception):
    """Base class for all package-specific errors."""


class HermiticityError(SdpSketchError):
    """Input matrix data is not Hermitian within tolerance."""


class ZeroMassError(SdpSketchError):
    """A sampling distribution has zero total mass."""


class ShapeError(SdpSketchError):
    """Operands have incompatible dimensions."""


class NumericalError(SdpSketchError):
    """A numerical routine failed to converge or left its validity range."""


class EmptySketch(SdpSketchError):
    """Every singular direction of the sketch fell below the filter threshold."""


class SizeError(SdpSketchError):
    """Problem size exceeds a hard cap for a dense reference routine."""


class ConfigError(SdpSketchError):
    """Solver configuration is inconsistent."""


class InternalError(SdpSketchError):
    """An internal consistency check failed; indicates a bug."""


class ManifestError(SdpSketchError):
    """A problem manifest or matrix file could not be parsed."""
