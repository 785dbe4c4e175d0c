"""
Quad surfaces of polycube templates: assembly, Catmull-Clark subdivision and
triangulation.

Every quad carries the id of the polycube boundary face it descends from, so
generated triangles keep their ground-truth face label.
"""

from dataclasses import dataclass
from typing import Dict

import numpy as np

from ..core.logging import get_logger
from ..mesh.surface import TriMesh
from ..polycube.structure import LatticePoint, PolycubeStructure

logger = get_logger(__name__)

# relative tolerance under which both quad diagonals count as equally long
DIAGONAL_TIE = 1e-12


@dataclass(frozen=True, eq=False)
class QuadMesh:
    """Closed quad surface; quads are counter-clockwise seen from outside."""

    vertices: np.ndarray
    quads: np.ndarray
    face_labels: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "vertices", np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        )
        object.__setattr__(
            self, "quads", np.asarray(self.quads, dtype=np.int64).reshape(-1, 4)
        )
        object.__setattr__(
            self, "face_labels", np.asarray(self.face_labels, dtype=np.int64).reshape(-1)
        )

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.quads)

    def edge_counts(self) -> np.ndarray:
        """Number of quads sharing each undirected edge."""
        q = self.quads
        d = np.stack([q, np.roll(q, -1, axis=1)], axis=2).reshape(-1, 2)
        _, counts = np.unique(np.sort(d, axis=1), axis=0, return_counts=True)
        return counts


def assemble_surface(pc: PolycubeStructure) -> QuadMesh:
    """One quad per boundary lattice facet of the cube union."""
    index: Dict[LatticePoint, int] = {}
    quads, labels = [], []
    for face in pc.boundary_faces:
        for u, v in face.facets:
            corners = (
                face.point(u, v),
                face.point(u + 1, v),
                face.point(u + 1, v + 1),
                face.point(u, v + 1),
            )
            quads.append([index.setdefault(p, len(index)) for p in corners])
            labels.append(face.face_id)
    vertices = np.array(sorted(index, key=index.__getitem__), dtype=np.float64)
    return QuadMesh(vertices, np.array(quads), np.array(labels))


def _subdivide_once(mesh: QuadMesh) -> QuadMesh:
    V, F = mesh.vertices, mesh.quads
    n, m = len(V), len(F)

    lo = np.minimum(F, np.roll(F, -1, axis=1))
    hi = np.maximum(F, np.roll(F, -1, axis=1))
    keys, inverse = np.unique((lo * n + hi).reshape(-1), return_inverse=True)
    edge_of = inverse.reshape(m, 4)  # edge_of[f, i] joins corners i and i+1
    E = np.stack([keys // n, keys % n], axis=1)

    face_pts = V[F].mean(axis=1)
    per_corner = np.repeat(face_pts, 4, axis=0)

    adjacent_faces = np.zeros((len(E), 3))
    np.add.at(adjacent_faces, edge_of.reshape(-1), per_corner)
    edge_pts = (V[E[:, 0]] + V[E[:, 1]] + adjacent_faces) / 4.0

    valence = np.bincount(E.reshape(-1), minlength=n).astype(np.float64)
    Q = np.zeros((n, 3))
    np.add.at(Q, F.reshape(-1), per_corner)
    Q /= np.bincount(F.reshape(-1), minlength=n)[:, None]
    mid = 0.5 * (V[E[:, 0]] + V[E[:, 1]])
    R = np.zeros((n, 3))
    np.add.at(R, E[:, 0], mid)
    np.add.at(R, E[:, 1], mid)
    R /= valence[:, None]
    moved = (Q + 2.0 * R + (valence - 3.0)[:, None] * V) / valence[:, None]

    face_ids = np.repeat((n + np.arange(m))[:, None], 4, axis=1)
    next_edge = n + m + edge_of
    prev_edge = np.roll(next_edge, 1, axis=1)
    children = np.stack([F, next_edge, face_ids, prev_edge], axis=2).reshape(-1, 4)

    return QuadMesh(
        np.concatenate([moved, face_pts, edge_pts]),
        children,
        np.repeat(mesh.face_labels, 4),
    )


def catmull_clark(mesh: QuadMesh, levels: int) -> QuadMesh:
    """Apply `levels` Catmull-Clark steps; child 4f+i sits at corner i of quad f."""
    for _ in range(levels):
        mesh = _subdivide_once(mesh)
    return mesh


def triangulate(mesh: QuadMesh) -> TriMesh:
    """Split every quad along its shorter diagonal.

    Quad q yields triangles 2q and 2q+1; equal diagonals split through the
    smallest vertex index of the quad.
    """
    F = mesh.quads
    P = mesh.vertices[F]
    ac = np.linalg.norm(P[:, 2] - P[:, 0], axis=1)
    bd = np.linalg.norm(P[:, 3] - P[:, 1], axis=1)
    tie = np.abs(ac - bd) <= DIAGONAL_TIE * np.maximum(ac, bd)
    min_on_ac = np.minimum(F[:, 0], F[:, 2]) < np.minimum(F[:, 1], F[:, 3])
    use_ac = np.where(tie, min_on_ac, ac < bd)

    a, b, c, d = F.T
    split_ac = np.stack(
        [np.stack([a, b, c], axis=1), np.stack([a, c, d], axis=1)], axis=1
    )
    split_bd = np.stack(
        [np.stack([b, c, d], axis=1), np.stack([b, d, a], axis=1)], axis=1
    )
    tris = np.where(use_ac[:, None, None], split_ac, split_bd).reshape(-1, 3)
    logger.debug(f"三角化 {len(F)} 个四边形 ({int(tie.sum())} 个对角线等长)")
    return TriMesh(mesh.vertices, tris)


def triangle_labels(mesh: QuadMesh) -> np.ndarray:
    """Face labels of `triangulate(mesh)`."""
    return np.repeat(mesh.face_labels, 2)
