"""Polycube templates and their face, edge and corner structure."""

from .structure import (
    LABEL_NAMES,
    NUM_TYPES,
    BoundaryFace,
    InternalFace,
    PolycubeEdge,
    PolycubeStructure,
    UnitCubeDomain,
    coplanar_label_groups,
    corner_points,
    label_groups,
    label_vector,
    template,
)

__all__ = [
    "LABEL_NAMES",
    "NUM_TYPES",
    "BoundaryFace",
    "InternalFace",
    "PolycubeEdge",
    "PolycubeStructure",
    "UnitCubeDomain",
    "template",
    "coplanar_label_groups",
    "label_groups",
    "corner_points",
    "label_vector",
]
