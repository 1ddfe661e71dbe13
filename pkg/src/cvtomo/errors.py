"""Exception types shared across the package."""


class CvtomoError(ValueError):
    """Base class for all package-specific errors."""


class DimensionError(CvtomoError):
    """Invalid or mismatched Fock-space dimension."""


class TruncationError(CvtomoError):
    """Fock-space truncation too small for the requested state.

    Carries the offending tail mass in ``tail_mass``.
    """

    def __init__(self, message, tail_mass=None):
        super().__init__(message)
        self.tail_mass = tail_mass


class StateValidationError(CvtomoError):
    """Density matrix violates hermiticity, positivity or normalization."""


class UnsupportedOrderError(CvtomoError):
    """Moment order outside the implemented range."""


class EfficiencyError(CvtomoError):
    """Detector efficiency outside (0, 1]."""


class ExtentError(CvtomoError):
    """Phase-space grid does not capture enough probability mass.

    ``captured`` holds the mass actually covered by the grid.
    """

    def __init__(self, message, captured=None):
        super().__init__(message)
        self.captured = captured


class ConfigError(CvtomoError):
    """Invalid experiment or solver configuration; ``field`` names the culprit."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class EmptyDataError(CvtomoError):
    """Record contains no usable counts."""


class UnstableReconstructionError(CvtomoError):
    """Filtered-backprojection denominator too close to zero."""


class IllPosedError(CvtomoError):
    """Rank-deficient design; the linear inversion has no unique solution."""
