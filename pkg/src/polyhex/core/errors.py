"""
流水线错误类型

每个阶段抛出带错误码与结构化细节的异常，消息文本来自消息目录。
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Self

from .i18n import _


@dataclass
class PipelineError(Exception):
    """流水线错误基类"""

    code: str
    message: str
    details: Dict[str, Any] = field(default_factory=dict)

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"

    @classmethod
    def from_key(cls, code: str, key: str, **details: Any) -> Self:
        """用消息目录键构造错误，格式化参数同时作为details保存"""
        return cls(code=code, message=_(key, **details), details=dict(details))


class ConfigError(PipelineError):
    """配置错误"""


class MeshError(PipelineError):
    """网格读取、校验或写出错误"""


class PolycubeError(PipelineError):
    """多立方体模板错误"""


class DatasetError(PipelineError):
    """训练数据生成错误"""


class ModelError(PipelineError):
    """GCN模型、训练与持久化错误"""


class SegmentationError(PipelineError):
    """表面分割错误"""


class PathError(PipelineError):
    """路径优化错误"""


class HexGenError(PipelineError):
    """六面体生成错误"""


class QualityError(PipelineError):
    """质量优化错误"""


@dataclass
class StageFailure(PipelineError):
    """某个流水线阶段失败，包装原始异常"""

    stage: str = ""
    cause: Optional[BaseException] = None

    @classmethod
    def wrap(cls, stage: str, cause: BaseException) -> Self:
        code = cause.code if isinstance(cause, PipelineError) else "STAGE_FAILED"
        return cls(
            code=code,
            message=_("errors.pipeline.stage_failed", stage=stage, cause=str(cause)),
            details={"stage": stage},
            stage=stage,
            cause=cause,
        )


__all__ = [
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
]
