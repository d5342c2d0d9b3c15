"""Exception types raised across the package.

Every error that callers are expected to catch derives from
:class:`TickVolError`.  The CLI maps these to exit code 2 (input/config
errors) versus 1 (validation-band failures).
"""


class TickVolError(Exception):
    """Base class for all tickvol errors."""


class InvalidCurveError(TickVolError):
    """A parameter curve is non-finite or not strictly positive on [0, 1]."""


class InvalidWeightError(TickVolError):
    """A pre-averaging weight function violates g(0) = g(1) = 0."""


class BoundaryError(TickVolError):
    """Evaluation point lies outside the interior (bandwidth, 1 - bandwidth)."""


class WindowError(TickVolError):
    """A tick window does not fit inside the series.

    Carries the number of missing ticks on each side so callers can report
    the deficit.
    """

    def __init__(self, message, *, deficit_left=0, deficit_right=0):
        super().__init__(message)
        self.deficit_left = deficit_left
        self.deficit_right = deficit_right


class DegenerateDivisionError(TickVolError):
    """A ratio estimator hit a zero denominator (e.g. zero intensity)."""


class RoundingDomainError(TickVolError):
    """Cent rounding would floor a price to zero or below.

    ``index`` identifies the offending observation.
    """

    def __init__(self, message, *, index):
        super().__init__(message)
        self.index = index


class FormatError(TickVolError):
    """A CSV/config file does not match its documented schema."""


class EmptySeriesError(TickVolError):
    """Cleaning or parsing left no usable observations."""


class ConfigError(TickVolError):
    """A run configuration is missing fields or violates invariants."""


class ScenarioFailureError(TickVolError):
    """Too many replications failed inside a Monte Carlo scenario."""
