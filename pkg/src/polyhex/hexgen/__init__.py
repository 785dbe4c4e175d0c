"""Harmonic parameterization and octree hex-mesh assembly."""

from .assemble import RectPatch, SurfaceLayout, assemble_hex_mesh, layout_surface, snap_ticks
from .octree import OctreeGrid, transfinite
from .param import (
    PatchParam,
    anchored_boundary,
    disk_boundary,
    harmonic_uv,
    map_patch_boundary,
    sample_surface_point,
    sample_surface_points,
)

__all__ = [
    "PatchParam",
    "OctreeGrid",
    "map_patch_boundary",
    "anchored_boundary",
    "disk_boundary",
    "harmonic_uv",
    "sample_surface_point",
    "sample_surface_points",
    "transfinite",
    "snap_ticks",
    "layout_surface",
    "assemble_hex_mesh",
    "RectPatch",
    "SurfaceLayout",
]
