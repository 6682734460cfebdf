"""Exception hierarchy for the calibration library.

Two branches drive the CLI exit-status contract: ``InputError`` (malformed,
insufficient, or unsupported input; exit status 2) and ``NumericalError``
(a computation that cannot be completed; exit status 1).
"""


class CalibrationError(Exception):
    """Base class for every error raised by this package."""


class InputError(CalibrationError):
    """Bad input data or usage (CLI exit status 2)."""


class NumericalError(CalibrationError):
    """Numerical failure during an otherwise valid computation (CLI exit status 1)."""


class ParseError(InputError):
    """A file could not be parsed into the expected structure."""


class ShapeError(InputError):
    """Parsed data has inconsistent shapes (e.g. point-count mismatch)."""


class InsufficientViews(InputError):
    """Fewer images than the operation requires."""


class UnsupportedModel(InputError):
    """The requested operation is not defined for this model family."""


class NonPositiveDepth(NumericalError):
    """A point lies at or behind the camera plane."""


class NegativeRadius(NumericalError):
    """Radial distortion functions are defined for r >= 0 only."""


class NumericalBreakdown(NumericalError):
    """A root or solution failed its residual check after polishing."""


class NoValidRoot(NumericalError):
    """No real root exists in the admissible range for this inversion."""


class DegenerateKnot(NumericalError):
    """The piecewise knot collapsed (r1 ~ 0), leaving the segments undefined."""


class DegenerateConfiguration(NumericalError):
    """Point configuration is rank-deficient (collinear or too few points)."""


class IllConditioned(NumericalError):
    """A linear system is rank-deficient or its solution is not physically valid."""


class DivergedObjective(NumericalError):
    """The optimization objective became non-finite."""
