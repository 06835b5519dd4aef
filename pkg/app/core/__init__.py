from .config import settings, get_settings
from .logging import setup_logging, get_logger
from .exceptions import (
    BaseAppException,
    SchemaError,
    GeometryError,
    DimensionError,
    EmptyDatasetError,
    MissingAnnotationError,
    ConfigError,
    VocabError,
    HeterogeneityError,
    TargetIndexError,
    ShapeError,
    CheckpointError,
    NumericalError,
    CheckpointSinkError,
    ArityError,
    UsageError
)

__all__ = [
    "settings",
    "get_settings",
    "setup_logging",
    "get_logger",
    "BaseAppException",
    "SchemaError",
    "GeometryError",
    "DimensionError",
    "EmptyDatasetError",
    "MissingAnnotationError",
    "ConfigError",
    "VocabError",
    "HeterogeneityError",
    "TargetIndexError",
    "ShapeError",
    "CheckpointError",
    "NumericalError",
    "CheckpointSinkError",
    "ArityError",
    "UsageError"
]
