"""
Triangle surface mesh.

`TriMesh` is an immutable, validated, closed manifold triangle surface. Derived
attributes (normals, areas, edge tables, adjacency) are computed lazily and
cached on the instance.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, List, Optional, Tuple

import numpy as np
from scipy import sparse

from ..core.errors import MeshError
from ..core.logging import get_logger

logger = get_logger(__name__)

Edge = Tuple[int, int]

DEGENERATE_AREA = 1e-12


def edge_key(a: int, b: int) -> Edge:
    """Undirected edge key with the smaller index first."""
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Watertight manifold triangle surface.

    Attributes:
        vertices: (n, 3) float64 positions.
        faces: (m, 3) int64 vertex indices, counter-clockwise seen from outside.
        sharp_edges: undirected vertex pairs flagged as sharp features.
    """

    vertices: np.ndarray
    faces: np.ndarray
    sharp_edges: FrozenSet[Edge] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        vertices = np.array(self.vertices, dtype=np.float64).reshape(-1, 3)
        faces = np.array(self.faces, dtype=np.int64).reshape(-1, 3)
        vertices.setflags(write=False)
        faces.setflags(write=False)
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "faces", faces)
        object.__setattr__(
            self, "sharp_edges", frozenset(edge_key(a, b) for a, b in self.sharp_edges)
        )
        self._validate()

    # ------------------------------------------------------------------ checks

    def _validate(self) -> None:
        n, m = len(self.vertices), len(self.faces)
        if n == 0 or m == 0:
            raise MeshError.from_key("EMPTY_MESH", "errors.mesh.empty_mesh")

        bad = np.flatnonzero((self.faces < 0).any(axis=1) | (self.faces >= n).any(axis=1))
        if bad.size:
            f = int(bad[0])
            index = int(self.faces[f][(self.faces[f] < 0) | (self.faces[f] >= n)][0])
            raise MeshError.from_key(
                "INDEX_OUT_OF_RANGE", "errors.mesh.index_out_of_range", face=f, index=index
            )

        f0, f1, f2 = self.faces.T
        repeated = np.flatnonzero((f0 == f1) | (f1 == f2) | (f0 == f2))
        if repeated.size:
            raise MeshError.from_key(
                "REPEATED_VERTEX", "errors.mesh.repeated_vertex", face=int(repeated[0])
            )

        # every undirected edge exactly twice, once per direction
        counts = np.bincount(self._edge_inverse, minlength=len(self.edges))
        bad_edges = np.flatnonzero(counts != 2)
        if bad_edges.size:
            a, b = self.edges[bad_edges[0]]
            raise MeshError.from_key(
                "NON_MANIFOLD_EDGE",
                "errors.mesh.non_manifold_edge",
                a=int(a),
                b=int(b),
                count=int(counts[bad_edges[0]]),
            )
        directed = self._directed_edges
        forward = directed[:, 0] < directed[:, 1]
        per_edge = np.bincount(self._edge_inverse[forward], minlength=len(self.edges))
        bad_orient = np.flatnonzero(per_edge != 1)
        if bad_orient.size:
            a, b = self.edges[bad_orient[0]]
            raise MeshError.from_key(
                "NON_MANIFOLD_EDGE",
                "errors.mesh.inconsistent_orientation",
                a=int(a),
                b=int(b),
            )

        limit = DEGENERATE_AREA * self.bbox_diagonal**2
        small = np.flatnonzero(self.face_areas <= limit)
        if small.size:
            f = int(small[0])
            raise MeshError.from_key(
                "DEGENERATE_FACE",
                "errors.mesh.degenerate_face",
                face=f,
                area=float(self.face_areas[f]),
            )

    # ---------------------------------------------------------------- geometry

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @cached_property
    def bbox(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    @cached_property
    def bbox_diagonal(self) -> float:
        lo, hi = self.bbox
        return float(np.linalg.norm(hi - lo))

    @cached_property
    def triangles(self) -> np.ndarray:
        """(m, 3, 3) corner positions per face."""
        return self.vertices[self.faces]

    @cached_property
    def _face_cross(self) -> np.ndarray:
        t = self.triangles
        return np.cross(t[:, 1] - t[:, 0], t[:, 2] - t[:, 0])

    @cached_property
    def face_areas(self) -> np.ndarray:
        return 0.5 * np.linalg.norm(self._face_cross, axis=1)

    @cached_property
    def face_normals(self) -> np.ndarray:
        """Unit outward normals."""
        cross = self._face_cross
        norm = np.linalg.norm(cross, axis=1, keepdims=True)
        return cross / np.where(norm > 0.0, norm, 1.0)

    @cached_property
    def face_centroids(self) -> np.ndarray:
        return self.triangles.mean(axis=1)

    @cached_property
    def vertex_normals(self) -> np.ndarray:
        """Area-weighted unit vertex normals."""
        acc = np.zeros_like(self.vertices)
        for k in range(3):
            np.add.at(acc, self.faces[:, k], self._face_cross)
        norm = np.linalg.norm(acc, axis=1, keepdims=True)
        return acc / np.where(norm > 0.0, norm, 1.0)

    # ---------------------------------------------------------------- topology

    @cached_property
    def _directed_edges(self) -> np.ndarray:
        """(3m, 2) directed edges; row 3*f+k is the edge leaving corner k of face f."""
        f = self.faces
        return np.stack([f, np.roll(f, -1, axis=1)], axis=2).reshape(-1, 2)

    @cached_property
    def _edge_keys(self) -> np.ndarray:
        d = self._directed_edges
        lo = np.minimum(d[:, 0], d[:, 1])
        hi = np.maximum(d[:, 0], d[:, 1])
        return lo * np.int64(max(self.n_vertices, 1)) + hi

    @cached_property
    def _edge_unique(self) -> Tuple[np.ndarray, np.ndarray]:
        keys, inverse = np.unique(self._edge_keys, return_inverse=True)
        return keys, inverse.reshape(-1)

    @property
    def _edge_inverse(self) -> np.ndarray:
        return self._edge_unique[1]

    @cached_property
    def edges(self) -> np.ndarray:
        """(E, 2) unique undirected edges, smaller index first, sorted."""
        keys = self._edge_unique[0]
        n = np.int64(max(self.n_vertices, 1))
        return np.stack([keys // n, keys % n], axis=1)

    @cached_property
    def edge_faces(self) -> np.ndarray:
        """(E, 2) the two faces incident to each edge (face to the left of lo->hi first)."""
        d = self._directed_edges
        face_of = np.repeat(np.arange(self.n_faces), 3)
        forward = d[:, 0] < d[:, 1]
        out = np.full((len(self.edges), 2), -1, dtype=np.int64)
        out[self._edge_inverse[forward], 0] = face_of[forward]
        out[self._edge_inverse[~forward], 1] = face_of[~forward]
        return out

    @cached_property
    def edge_index(self) -> Dict[Edge, int]:
        return {(int(a), int(b)): i for i, (a, b) in enumerate(self.edges)}

    @cached_property
    def face_edges(self) -> np.ndarray:
        """(m, 3) edge ids; column k is the edge from corner k to corner k+1."""
        return self._edge_inverse.reshape(-1, 3)

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        e = self.edges
        return np.linalg.norm(self.vertices[e[:, 1]] - self.vertices[e[:, 0]], axis=1)

    @cached_property
    def face_adjacency(self) -> sparse.csr_matrix:
        """Symmetric boolean face adjacency through shared edges."""
        ef = self.edge_faces
        m = self.n_faces
        rows = np.concatenate([ef[:, 0], ef[:, 1]])
        cols = np.concatenate([ef[:, 1], ef[:, 0]])
        data = np.ones(len(rows), dtype=bool)
        return sparse.csr_matrix((data, (rows, cols)), shape=(m, m))

    @cached_property
    def vertex_adjacency(self) -> sparse.csr_matrix:
        e = self.edges
        n = self.n_vertices
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        return sparse.csr_matrix(
            (np.ones(len(rows), dtype=bool), (rows, cols)), shape=(n, n)
        )

    @cached_property
    def vertex_faces(self) -> sparse.csr_matrix:
        """(n, m) vertex-face incidence."""
        m = self.n_faces
        rows = self.faces.reshape(-1)
        cols = np.repeat(np.arange(m), 3)
        return sparse.csr_matrix(
            (np.ones(len(rows), dtype=bool), (rows, cols)), shape=(self.n_vertices, m)
        )

    def vertex_neighbors(self, v: int) -> np.ndarray:
        adj = self.vertex_adjacency
        return adj.indices[adj.indptr[v] : adj.indptr[v + 1]]

    @cached_property
    def directed_edge_face(self) -> Dict[Edge, int]:
        """Map (a, b) -> the face containing a->b in its counter-clockwise order."""
        d = self._directed_edges
        face_of = np.repeat(np.arange(self.n_faces), 3)
        return {(int(a), int(b)): int(f) for (a, b), f in zip(d, face_of)}

    @property
    def euler_characteristic(self) -> int:
        return self.n_vertices - len(self.edges) + self.n_faces

    @property
    def genus(self) -> int:
        return (2 - self.euler_characteristic) // 2

    # --------------------------------------------------------------- rebuilds

    def with_vertices(self, vertices: np.ndarray) -> "TriMesh":
        """Same connectivity and sharp flags, new positions."""
        return TriMesh(vertices, self.faces, self.sharp_edges)

    def with_sharp_edges(self, sharp: FrozenSet[Edge]) -> "TriMesh":
        return TriMesh(self.vertices, self.faces, sharp)


def normalize_to_unit_box(mesh: TriMesh) -> TriMesh:
    """Center at the origin and scale uniformly so the longest side spans 1."""
    lo, hi = mesh.bbox
    extent = float((hi - lo).max())
    if not extent > 0.0:
        raise MeshError.from_key("ZERO_EXTENT", "errors.mesh.zero_extent")
    center = 0.5 * (lo + hi)
    return mesh.with_vertices((mesh.vertices - center) / extent)


def normalization_transform(lo: np.ndarray, hi: np.ndarray) -> Tuple[np.ndarray, float]:
    """Center and scale used by `normalize_to_unit_box` for a given box."""
    extent = float((np.asarray(hi) - np.asarray(lo)).max())
    if not extent > 0.0:
        raise MeshError.from_key("ZERO_EXTENT", "errors.mesh.zero_extent")
    return 0.5 * (np.asarray(lo, float) + np.asarray(hi, float)), extent


def dihedral_deviation(mesh: TriMesh) -> np.ndarray:
    """Per-edge angle (radians) between the normals of the two incident faces.

    Equals the deviation of the dihedral angle from a flat pi.
    """
    ef = mesh.edge_faces
    n = mesh.face_normals
    dots = np.einsum("ij,ij->i", n[ef[:, 0]], n[ef[:, 1]])
    return np.arccos(np.clip(dots, -1.0, 1.0))


def detect_sharp_edges(mesh: TriMesh, angle_threshold: float = 30.0) -> FrozenSet[Edge]:
    """Edges whose dihedral angle deviates from flat by more than the threshold (degrees)."""
    deviation = dihedral_deviation(mesh)
    flagged = mesh.edges[deviation > np.radians(angle_threshold)]
    logger.debug(f"检测到 {len(flagged)} 条尖锐边 (阈值 {angle_threshold}°)")
    return frozenset((int(a), int(b)) for a, b in flagged)


def boundary_loops(faces: np.ndarray) -> List[List[int]]:
    """Boundary loops of a triangle patch, each with the patch on its left.

    A pinched vertex (two outgoing boundary edges) shows up as a vertex that
    repeats inside a loop.
    """
    f = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
    directed = set()
    for a, b, c in f.tolist():
        directed.update(((a, b), (b, c), (c, a)))
    outgoing: Dict[int, List[int]] = {}
    for a, b in sorted(directed):
        if (b, a) not in directed:
            outgoing.setdefault(a, []).append(b)

    loops: List[List[int]] = []
    for start in sorted(outgoing):
        while outgoing[start]:
            loop = [start]
            v = outgoing[start].pop(0)
            while v != start and outgoing.get(v):
                loop.append(v)
                v = outgoing[v].pop(0)
            loops.append(loop)
    return loops


def patch_euler(faces: np.ndarray) -> int:
    """V - E + F of a triangle patch given by its faces."""
    f = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
    if len(f) == 0:
        return 0
    verts = np.unique(f)
    d = np.stack([f, np.roll(f, -1, axis=1)], axis=2).reshape(-1, 2)
    undirected = np.unique(np.sort(d, axis=1), axis=0)
    return int(len(verts) - len(undirected) + len(f))


def subset_mesh_faces(mesh: TriMesh, face_ids: np.ndarray) -> np.ndarray:
    """Faces of a subset, still indexing the global vertex array."""
    return mesh.faces[np.asarray(face_ids, dtype=np.int64)]


def area_weighted_centroid(mesh: TriMesh, face_ids: Optional[np.ndarray] = None) -> np.ndarray:
    ids = np.arange(mesh.n_faces) if face_ids is None else np.asarray(face_ids)
    w = mesh.face_areas[ids]
    return (mesh.face_centroids[ids] * w[:, None]).sum(axis=0) / w.sum()
