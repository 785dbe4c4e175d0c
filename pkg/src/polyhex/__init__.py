"""PolyHex - surface triangle meshes to all-hex volume meshes.

A graph convolutional classifier picks the polycube template of a mesh,
polycube-seeded K-means segments its surface, and octree subdivision with
harmonic surface maps produces the hex mesh, which is then pillowed and
optimized to a scaled-Jacobian threshold.
"""

__version__ = "0.1.0"
__author__ = "ydzat"
__email__ = "ydzat@live.com"

from .core.errors import PipelineError, StageFailure
from .core.types import PipelineConfig

__all__ = [
    "PipelineConfig",
    "PipelineError",
    "StageFailure",
]
