"""Core module for PolyHex."""

from .errors import (
    ConfigError,
    DatasetError,
    HexGenError,
    MeshError,
    ModelError,
    PathError,
    PipelineError,
    PolycubeError,
    QualityError,
    SegmentationError,
    StageFailure,
)
from .i18n import I18nConfig, _, configure_i18n, get_text, set_locale
from .interfaces import PipelineStage
from .logging import LogConfig, ModuleLogger, configure_logging, get_logger
from .types import (
    ConfigDict,
    DatasetConfig,
    HexConfig,
    PathWeights,
    PipelineConfig,
    QualityConfig,
    SegmentConfig,
    TrainConfig,
)

__all__ = [
    "PipelineStage",
    "ConfigDict",
    "DatasetConfig",
    "TrainConfig",
    "PathWeights",
    "SegmentConfig",
    "HexConfig",
    "QualityConfig",
    "PipelineConfig",
    "PipelineError",
    "ConfigError",
    "MeshError",
    "PolycubeError",
    "DatasetError",
    "ModelError",
    "SegmentationError",
    "PathError",
    "HexGenError",
    "QualityError",
    "StageFailure",
    "get_logger",
    "configure_logging",
    "LogConfig",
    "ModuleLogger",
    "get_text",
    "set_locale",
    "_",
    "configure_i18n",
    "I18nConfig",
]
