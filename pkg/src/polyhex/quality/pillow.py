"""Pillowing: one layer of hexes between the boundary and a shrunk copy of it."""

import numpy as np

from ..core.logging import get_logger
from ..mesh.volume import HexMesh, VertexClass

logger = get_logger(__name__)


def quad_normals(vertices: np.ndarray, quads: np.ndarray) -> np.ndarray:
    """Area-weighted (unnormalized) normals of (q, 4) quads from their diagonals."""
    d1 = vertices[quads[:, 2]] - vertices[quads[:, 0]]
    d2 = vertices[quads[:, 3]] - vertices[quads[:, 1]]
    return 0.5 * np.cross(d1, d2)


def local_edge_lengths(mesh: HexMesh) -> np.ndarray:
    """Mean length of the hex edges incident to each vertex."""
    e = mesh.edges
    lengths = np.linalg.norm(mesh.vertices[e[:, 1]] - mesh.vertices[e[:, 0]], axis=1)
    total = np.bincount(e.reshape(-1), weights=np.repeat(lengths, 2), minlength=mesh.n_vertices)
    count = np.bincount(e.reshape(-1), minlength=mesh.n_vertices)
    return total / np.maximum(count, 1)


def pillow(mesh: HexMesh, offset: float = 0.25) -> HexMesh:
    """Duplicate the boundary inward and fill the gap with one hex per boundary quad.

    The original boundary vertices keep their ids and positions; their inner
    copies move along the inward vertex normal by `offset` times the local
    edge length. Afterwards every element has at most one boundary face.
    """
    quads = mesh.boundary_quads
    boundary = mesh.boundary_vertices
    normals = np.zeros_like(mesh.vertices)
    qn = quad_normals(mesh.vertices, quads)
    for k in range(4):
        np.add.at(normals, quads[:, k], qn)
    norm = np.linalg.norm(normals, axis=1, keepdims=True)
    normals = normals / np.where(norm > 0.0, norm, 1.0)

    inner = np.full(mesh.n_vertices, -1, dtype=np.int64)
    inner[boundary] = mesh.n_vertices + np.arange(len(boundary))
    step = offset * local_edge_lengths(mesh)[boundary, None]
    copies = mesh.vertices[boundary] - step * normals[boundary]
    vertices = np.concatenate([mesh.vertices, copies])

    old = mesh.elements.copy()
    on_boundary = inner[old] >= 0
    old[on_boundary] = inner[old][on_boundary]
    layer = np.concatenate([inner[quads], quads], axis=1)
    elements = np.concatenate([old, layer])

    tags = None
    if mesh.boundary_tags is not None:
        tags = np.concatenate(
            [mesh.boundary_tags, np.full(len(boundary), int(VertexClass.INTERIOR))]
        )
    out = HexMesh(vertices, elements, tags)
    logger.info(
        f"垫层: {mesh.n_elements} -> {out.n_elements} 个单元 ({len(quads)} 个边界四边形)"
    )
    return out


def max_boundary_faces(mesh: HexMesh) -> int:
    return int(mesh.boundary_faces_per_element().max()) if mesh.n_elements else 0
