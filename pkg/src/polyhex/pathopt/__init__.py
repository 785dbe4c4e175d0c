"""Boundary path optimization between polycube corners."""

from .boundaries import (
    BoundaryResult,
    PathSet,
    extract_paths,
    flood_fill,
    identify_corners,
    load_paths,
    optimize_boundaries,
    save_paths,
)
from .graph import EdgeGraph, edge_weight, path_cost, shortest_path

__all__ = [
    "EdgeGraph",
    "edge_weight",
    "path_cost",
    "shortest_path",
    "PathSet",
    "BoundaryResult",
    "identify_corners",
    "optimize_boundaries",
    "extract_paths",
    "flood_fill",
    "save_paths",
    "load_paths",
]
