"""Scaled-Jacobian evaluation, pillowing and energy-based optimization."""

from .energy import EnergyState, energy, energy_gradient, mean_corner_edge_length
from .jacobian import (
    QualityReport,
    element_min_sj,
    quality_report,
    scaled_jacobian,
    scaled_jacobians,
    write_report,
)
from .optimize import optimize, smart_smooth
from .pillow import max_boundary_faces, pillow
from .projection import (
    FeatureSet,
    SurfaceProjector,
    classify_boundary_vertices,
    closest_surface_point,
)

__all__ = [
    "QualityReport",
    "EnergyState",
    "scaled_jacobian",
    "scaled_jacobians",
    "element_min_sj",
    "quality_report",
    "write_report",
    "pillow",
    "max_boundary_faces",
    "FeatureSet",
    "SurfaceProjector",
    "classify_boundary_vertices",
    "closest_surface_point",
    "energy",
    "energy_gradient",
    "mean_corner_edge_length",
    "optimize",
    "smart_smooth",
]
