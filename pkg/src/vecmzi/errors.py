"""Exception types raised by the simulator."""


class VecmziError(Exception):
    """Base class for all library errors."""


class ConfigError(VecmziError):
    """A scenario config file could not be parsed or is structurally wrong."""


class ValidationError(VecmziError):
    """A config parsed fine but violates an invariant."""


class GridMismatchError(VecmziError):
    """Two fields that must share a grid do not."""


class DegenerateBasisError(VecmziError):
    """The (particle, wave) basis is singular (theta at or near pi)."""


class DegenerateFitError(VecmziError):
    """A fringe fit has no solvable least-squares system."""


class UnnormalizedFieldError(VecmziError):
    """Port fields handed to the photon router do not carry unit total probability."""


class AnnulusOutsideGridError(VecmziError):
    """A ring-scan annulus extends beyond the grid."""


class OutOfRegimeError(VecmziError):
    """A calibration target lies outside the small-mu model's validity range."""
