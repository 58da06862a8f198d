"""Exception types shared across the toolkit."""


class ScatterkitError(Exception):
    """Base class for all toolkit errors."""


class DimensionError(ScatterkitError, ValueError):
    """Grid shapes are incompatible or a subsampling factor does not divide."""


class ScaleError(ScatterkitError, ValueError):
    """Requested invariance scale does not fit on the grid."""


class FrameError(ScatterkitError, RuntimeError):
    """Filter bank violates the configured frame-bound gate.

    Carries the offending frequency (in radians per sample, one entry per
    axis) where the Littlewood-Paley sum dips below the gate.
    """

    def __init__(self, message, frequency=None):
        super().__init__(message)
        self.frequency = frequency


class CascadeAccuracyError(ScatterkitError, RuntimeError):
    """Deconvolution mask leaves too much band-pass energy uncovered."""


class NonDiffeomorphicError(ScatterkitError, ValueError):
    """Warp field has Jacobian norm >= 1 and is rejected."""


class UndefinedRatioError(ScatterkitError, ZeroDivisionError):
    """Stability ratio requested for a warp at zero deformation distance."""


class RegularizationRequiredError(ScatterkitError, ValueError):
    """Singular design matrix cannot be fit without regularization."""


class SplitError(ScatterkitError, ValueError):
    """Train/test split is unusable (e.g. a class missing from train)."""


class FormatError(ScatterkitError, ValueError):
    """Malformed SIG1 / PGM / CSV / manifest content."""
