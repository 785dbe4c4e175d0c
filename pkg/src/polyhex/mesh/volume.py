"""
Hexahedral volume mesh.

Elements use the VTK hexahedron corner order: the bottom quad (0, 1, 2, 3)
counter-clockwise seen from the top, then the top quad (4, 5, 6, 7) above it.
"""

from dataclasses import dataclass
from enum import IntEnum
from functools import cached_property
from typing import Optional, Tuple

import numpy as np

from ..core.errors import MeshError

# Outward-oriented local quad faces of a positively oriented hex.
HEX_FACES = np.array(
    [
        (0, 3, 2, 1),  # -z
        (4, 5, 6, 7),  # +z
        (0, 1, 5, 4),  # -y
        (1, 2, 6, 5),  # +x
        (2, 3, 7, 6),  # +y
        (3, 0, 4, 7),  # -x
    ],
    dtype=np.int64,
)

HEX_EDGES = np.array(
    [
        (0, 1), (1, 2), (2, 3), (3, 0),
        (4, 5), (5, 6), (6, 7), (7, 4),
        (0, 4), (1, 5), (2, 6), (3, 7),
    ],
    dtype=np.int64,
)  # fmt: skip


class VertexClass(IntEnum):
    """Boundary tag of a hex vertex."""

    INTERIOR = 0
    FACE = 1
    EDGE = 2
    CORNER = 3


@dataclass(frozen=True, eq=False)
class HexMesh:
    """All-hex mesh with optional per-vertex boundary tags."""

    vertices: np.ndarray
    elements: np.ndarray
    boundary_tags: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        vertices = np.array(self.vertices, dtype=np.float64).reshape(-1, 3)
        elements = np.array(self.elements, dtype=np.int64).reshape(-1, 8)
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "elements", elements)
        if self.boundary_tags is not None:
            tags = np.array(self.boundary_tags, dtype=np.int64).reshape(-1)
            object.__setattr__(self, "boundary_tags", tags)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    def validate(self) -> None:
        """Raise MeshError unless the mesh is non-empty and conforming."""
        if self.n_vertices == 0 or self.n_elements == 0:
            raise MeshError.from_key("EMPTY_MESH", "errors.mesh.empty_mesh")
        srt = np.sort(self.elements, axis=1)
        dup = np.flatnonzero((srt[:, 1:] == srt[:, :-1]).any(axis=1))
        if dup.size:
            raise MeshError.from_key(
                "BAD_HEX", "errors.mesh.bad_hex", element=int(dup[0])
            )
        _, counts = self._face_table
        if counts.size and counts.max() > 2:
            raise MeshError.from_key(
                "NON_CONFORMING", "errors.mesh.non_conforming", count=int(counts.max())
            )

    @cached_property
    def _all_faces(self) -> np.ndarray:
        """(6m, 4) oriented quads, row 6*e+k is local face k of element e."""
        return self.elements[:, HEX_FACES].reshape(-1, 4)

    @cached_property
    def _face_table(self) -> Tuple[np.ndarray, np.ndarray]:
        keys = np.sort(self._all_faces, axis=1)
        _, inverse, counts = np.unique(
            keys, axis=0, return_inverse=True, return_counts=True
        )
        return inverse.reshape(-1), counts

    @cached_property
    def boundary_face_mask(self) -> np.ndarray:
        """(m, 6) True where the local face lies on the boundary."""
        inverse, counts = self._face_table
        return (counts[inverse] == 1).reshape(-1, 6)

    @cached_property
    def boundary_quads(self) -> np.ndarray:
        """(Q, 4) outward-oriented boundary quads."""
        return self._all_faces[self.boundary_face_mask.reshape(-1)]

    @cached_property
    def boundary_vertices(self) -> np.ndarray:
        return np.unique(self.boundary_quads)

    @cached_property
    def is_boundary_vertex(self) -> np.ndarray:
        mask = np.zeros(self.n_vertices, dtype=bool)
        mask[self.boundary_vertices] = True
        return mask

    def boundary_faces_per_element(self) -> np.ndarray:
        return self.boundary_face_mask.sum(axis=1)

    @cached_property
    def vertex_elements(self) -> list:
        """Per-vertex array of incident element ids."""
        order = np.argsort(self.elements.reshape(-1), kind="stable")
        owners = order // 8
        counts = np.bincount(self.elements.reshape(-1), minlength=self.n_vertices)
        return np.split(owners, np.cumsum(counts)[:-1])

    @cached_property
    def edges(self) -> np.ndarray:
        e = self.elements[:, HEX_EDGES].reshape(-1, 2)
        return np.unique(np.sort(e, axis=1), axis=0)

    def mean_edge_length(self) -> float:
        e = self.edges
        return float(
            np.linalg.norm(self.vertices[e[:, 1]] - self.vertices[e[:, 0]], axis=1).mean()
        )

    def with_vertices(self, vertices: np.ndarray) -> "HexMesh":
        return HexMesh(vertices, self.elements, self.boundary_tags)

    def with_tags(self, tags: np.ndarray) -> "HexMesh":
        return HexMesh(self.vertices, self.elements, tags)
