"""Triangle and hexahedral meshes, dual graphs and file I/O."""

from .graph import FaceGraph, build_face_graph
from .io import load_hex_mesh, load_tri_mesh, save_hex_mesh, save_tri_mesh
from .refine import Refinement, refine_faces, refine_uniform
from .surface import (
    TriMesh,
    detect_sharp_edges,
    edge_key,
    normalize_to_unit_box,
)
from .volume import HEX_FACES, HexMesh, VertexClass

__all__ = [
    "TriMesh",
    "HexMesh",
    "VertexClass",
    "HEX_FACES",
    "FaceGraph",
    "build_face_graph",
    "load_tri_mesh",
    "save_tri_mesh",
    "load_hex_mesh",
    "save_hex_mesh",
    "normalize_to_unit_box",
    "detect_sharp_edges",
    "edge_key",
    "refine_faces",
    "refine_uniform",
    "Refinement",
]
