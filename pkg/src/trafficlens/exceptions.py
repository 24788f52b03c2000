"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command line front end:
1 for usage/configuration problems, 2 for bad data or files, 3 for
numerical failures.
"""


class TrafficLensError(Exception):
    exit_code = 2
    kind = "error"


class ConfigError(TrafficLensError, ValueError):
    exit_code = 1
    kind = "config"


class DataError(TrafficLensError, ValueError):
    """Malformed input data; optional ``location`` names the line or file."""

    kind = "data"

    def __init__(self, message, location=None):
        if location is not None:
            message = f"{location}: {message}"
        super().__init__(message)
        self.location = location


class ParseError(DataError):
    kind = "parse"


class SchemaError(DataError):
    kind = "schema"


class GapError(DataError):
    kind = "gap"


class ShapeError(DataError):
    kind = "shape"


class LabelError(DataError):
    kind = "label"


class DegenerateDataError(DataError):
    """Input is valid but carries no information to fit (one class, constant series)."""

    kind = "degenerate"


class ArtifactError(DataError):
    kind = "artifact"


class NumericError(TrafficLensError, ArithmeticError):
    exit_code = 3
    kind = "numeric"


class ConvergenceError(NumericError):
    """Optimizer hit its iteration cap. ``best`` holds the best-so-far model."""

    kind = "convergence"

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class StabilityError(NumericError, ValueError):
    kind = "stability"


class TrainingError(NumericError):
    kind = "divergence"

    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch
