"""
流水线服务模块

阶段实现与端到端运行器。
"""

from .pipeline import (
    PipelineContext,
    default_stages,
    probability_row,
    run_pipeline,
    run_stages,
    statistics_row,
)

__all__ = [
    "PipelineContext",
    "default_stages",
    "run_stages",
    "run_pipeline",
    "probability_row",
    "statistics_row",
]
