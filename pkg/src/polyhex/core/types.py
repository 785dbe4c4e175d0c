"""
Core data types for PolyHex.

Typed stage configurations. Every stage reads its parameters from one of these
models; `PipelineConfig` nests them all and is what YAML config files and CLI
overrides resolve to.
"""

from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict as ModelConfig, Field

# Type aliases
ConfigDict = Dict[str, Any]


class _StageConfig(BaseModel):
    model_config = ModelConfig(extra="forbid", validate_assignment=True)


class DatasetConfig(_StageConfig):
    """Procedural training-data generation."""

    subdivision_levels: int = Field(2, ge=0, description="Catmull-Clark levels")
    cage_resolution: int = Field(4, ge=2, description="Control points per axis")
    perturb_fraction: float = Field(
        0.3, gt=0.0, le=1.0, description="Fraction of cage points displaced"
    )
    sigma: float = Field(0.08, ge=0.0, description="Displacement std / bbox diag")
    cage_margin: float = Field(0.1, gt=0.0, description="Cage padding per axis")
    max_attempts: int = Field(100, ge=1, description="Rejection-sampling budget")


class TrainConfig(_StageConfig):
    """GCN training hyper-parameters."""

    learning_rate: float = Field(1e-3, gt=0.0)
    l2_lambda: float = Field(1e-4, ge=0.0, description="Weight of the L2 penalty")
    epochs: int = Field(60, ge=1)
    batch_size: int = Field(32, ge=1)
    optimizer: Literal["adam", "rmsprop"] = "adam"
    rng_seed: int = 0
    beta1: float = Field(0.9, ge=0.0, lt=1.0)
    beta2: float = Field(0.999, ge=0.0, lt=1.0)
    rho: float = Field(0.9, ge=0.0, lt=1.0)
    eps: float = Field(1e-8, gt=0.0)
    val_fraction: float = Field(0.1, ge=0.0, lt=1.0)


class PathWeights(_StageConfig):
    """Coefficients of the boundary-path edge weight."""

    lambda0_sharp: float = Field(4.0, gt=0.0, description="lambda0 on sharp edges")
    lambda0_smooth: float = Field(1.0, gt=0.0, description="lambda0 elsewhere")
    lambda1: float = Field(0.5, ge=0.0, description="Turning-angle penalty")
    lambda2: float = Field(0.5, ge=0.0, description="Goal-deviation penalty")
    sharp_angle: float = Field(30.0, ge=0.0, le=180.0, description="Degrees")


class SegmentConfig(_StageConfig):
    """Polycube-seeded K-means."""

    tol: float = Field(0.03, ge=0.0, description="Relative loss change to stop")
    max_iters: int = Field(500, ge=1)
    min_fragment: int = Field(
        0, ge=0, description="Fragments below this size are merged (0 = all)"
    )


class HexConfig(_StageConfig):
    """Octree hex generation."""

    level: int = Field(3, ge=1, le=6, description="Octree subdivision level")
    min_faces_per_facet: int = Field(
        24, ge=0, description="Refine input until each lattice facet has this many"
    )


class QualityConfig(_StageConfig):
    """Pillowing and energy optimization."""

    alpha: float = Field(1e-4, gt=0.0, description="Gradient step")
    sj_threshold: float = Field(0.1, ge=-1.0, le=1.0)
    max_iters: int = Field(200_000, ge=0)
    smooth_every: int = Field(1000, ge=1)
    pillow: bool = True
    pillow_offset: float = Field(0.25, gt=0.0, lt=1.0)
    search_scale: float = Field(10.0, gt=0.0)
    snap_tol: float = Field(1e-8, ge=0.0, description="Fraction of bbox diagonal")


class PipelineConfig(_StageConfig):
    """End-to-end configuration."""

    mesh: Optional[Path] = None
    output: Path = Path("hex.vtk")
    model: Optional[Path] = None
    centroid_model: Optional[Path] = None
    oracle_type: Optional[int] = Field(None, ge=1, le=11)
    seed: int = 0
    dataset: DatasetConfig = Field(default_factory=DatasetConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    centroid_train: TrainConfig = Field(
        default_factory=lambda: TrainConfig(optimizer="rmsprop")
    )
    segment: SegmentConfig = Field(default_factory=SegmentConfig)
    paths: PathWeights = Field(default_factory=PathWeights)
    hex: HexConfig = Field(default_factory=HexConfig)
    quality: QualityConfig = Field(default_factory=QualityConfig)

    @classmethod
    def from_yaml(cls, path: Path) -> "PipelineConfig":
        """Load the `pipeline:` section (or the whole document) of a YAML file."""
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
        section = data.get("pipeline")
        if section is None:
            section = {k: v for k, v in data.items() if k != "logging"}
        return cls.model_validate(section)

    def with_overrides(self, items: List[str]) -> "PipelineConfig":
        """Apply `section.key=value` overrides; values are parsed as YAML scalars."""
        from .errors import ConfigError

        data = self.model_dump()
        for item in items:
            key, sep, raw = item.partition("=")
            if not sep or not key.strip():
                raise ConfigError.from_key(
                    "INVALID_OVERRIDE", "errors.config.invalid_override", item=item
                )
            target = data
            parts = key.strip().split(".")
            for part in parts[:-1]:
                if not isinstance(target.get(part), dict):
                    raise ConfigError.from_key(
                        "UNKNOWN_KEY", "errors.config.unknown_key", key=key
                    )
                target = target[part]
            if parts[-1] not in target:
                raise ConfigError.from_key(
                    "UNKNOWN_KEY", "errors.config.unknown_key", key=key
                )
            target[parts[-1]] = yaml.safe_load(raw)
        return type(self).model_validate(data)
