"""Traffic analytics: volume forecasting, accident-severity classification and image classification."""

from .exceptions import (
    ArtifactError,
    ConfigError,
    ConvergenceError,
    DataError,
    DegenerateDataError,
    GapError,
    LabelError,
    NumericError,
    ParseError,
    SchemaError,
    ShapeError,
    StabilityError,
    TrafficLensError,
    TrainingError,
)

__version__ = "0.1.0"
DEFAULT_SEED = 42
