"""
Closest points on the input surface, its feature curves and its corners.

Face-class queries test only triangles whose bounding boxes meet a search box
around the query (`search_scale` times the local triangle edge); an empty box
is doubled up to four times before falling back to every triangle. Candidate
lists are cached per hex vertex until `refresh`.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Optional

import numpy as np
import trimesh
from scipy.spatial import cKDTree

from ..core.logging import get_logger
from ..mesh.surface import TriMesh
from ..mesh.volume import HexMesh, VertexClass
from ..pathopt.boundaries import PathSet
from .pillow import local_edge_lengths

logger = get_logger(__name__)

EXPANSIONS = 4
CHUNK = 512
EDGE_TOL = 0.25  # of the local hex edge length


@dataclass(frozen=True, eq=False)
class FeatureSet:
    """Feature curves as (S, 2, 3) segments and corner points (C, 3)."""

    segments: np.ndarray
    corners: np.ndarray

    @classmethod
    def from_paths(cls, tri: TriMesh, paths: PathSet) -> "FeatureSet":
        pairs = [(a, b) for p in paths.paths for a, b in zip(p, p[1:])]
        segs = tri.vertices[np.array(pairs, dtype=np.int64).reshape(-1, 2)]
        return cls(segs.reshape(-1, 2, 3), tri.vertices[np.array(paths.corner_map, dtype=np.int64)])

    @classmethod
    def from_sharp_edges(cls, tri: TriMesh) -> "FeatureSet":
        sharp = np.array(sorted(tri.sharp_edges), dtype=np.int64).reshape(-1, 2)
        degree = np.bincount(sharp.reshape(-1), minlength=tri.n_vertices)
        return cls(tri.vertices[sharp].reshape(-1, 2, 3), tri.vertices[degree >= 3])


def closest_on_segments(points: np.ndarray, segments: np.ndarray) -> np.ndarray:
    """Nearest point on any of the (S, 2, 3) segments for each of (P, 3) points."""
    points = np.atleast_2d(points)
    a, b = segments[:, 0], segments[:, 1]
    ab = b - a
    denom = np.einsum("ij,ij->i", ab, ab)
    out = np.empty_like(points)
    for lo in range(0, len(points), CHUNK):
        p = points[lo : lo + CHUNK]
        t = np.einsum("psd,sd->ps", p[:, None, :] - a[None], ab) / np.where(denom > 0, denom, 1.0)
        t = np.clip(t, 0.0, 1.0)
        q = a[None] + t[..., None] * ab[None]
        d2 = ((q - p[:, None, :]) ** 2).sum(axis=2)
        best = d2.argmin(axis=1)
        out[lo : lo + CHUNK] = q[np.arange(len(p)), best]
    return out


class SurfaceProjector:
    """Projects hex vertices onto the class-appropriate part of the surface."""

    def __init__(
        self, tri: TriMesh, features: Optional[FeatureSet] = None, search_scale: float = 10.0
    ) -> None:
        self.tri = tri
        self.features = features if features is not None else FeatureSet.from_sharp_edges(tri)
        self.search_scale = search_scale
        self._cache: Dict[int, np.ndarray] = {}

    @cached_property
    def _triangles(self) -> np.ndarray:
        return self.tri.triangles

    @cached_property
    def _boxes(self) -> tuple:
        t = self._triangles
        return t.min(axis=1), t.max(axis=1)

    @cached_property
    def _tree(self) -> cKDTree:
        return cKDTree(self.tri.face_centroids)

    @cached_property
    def _face_size(self) -> np.ndarray:
        t = self._triangles
        return np.linalg.norm(t - np.roll(t, 1, axis=1), axis=2).max(axis=1)

    @cached_property
    def _corner_tree(self) -> Optional[cKDTree]:
        return cKDTree(self.features.corners) if len(self.features.corners) else None

    def refresh(self) -> None:
        self._cache.clear()

    def candidates(self, x: np.ndarray) -> np.ndarray:
        _, nearest = self._tree.query(x)
        half = self.search_scale * float(self._face_size[nearest])
        lo, hi = self._boxes
        for _ in range(EXPANSIONS + 1):
            ids = np.flatnonzero(((lo <= x + half) & (hi >= x - half)).all(axis=1))
            if len(ids):
                return ids
            half *= 2.0
        return np.arange(self.tri.n_faces)

    def on_surface(self, x: np.ndarray, key: Optional[int] = None) -> np.ndarray:
        if key is not None and key in self._cache:
            ids = self._cache[key]
        else:
            ids = self.candidates(x)
            if key is not None:
                self._cache[key] = ids
        tris = self._triangles[ids]
        q = trimesh.triangles.closest_point(tris, np.repeat(x[None], len(ids), axis=0))
        return q[int(((q - x) ** 2).sum(axis=1).argmin())]

    def project(self, x: np.ndarray, cls: int, key: Optional[int] = None) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if cls == VertexClass.CORNER and self._corner_tree is not None:
            _, i = self._corner_tree.query(x)
            return self.features.corners[int(i)].copy()
        if cls == VertexClass.EDGE and len(self.features.segments):
            return closest_on_segments(x[None], self.features.segments)[0]
        return self.on_surface(x, key)

    def project_many(self, points: np.ndarray, classes: np.ndarray, keys: np.ndarray) -> np.ndarray:
        return np.array(
            [self.project(p, int(c), int(k)) for p, c, k in zip(points, classes, keys)]
        ).reshape(-1, 3)


def closest_surface_point(
    x: np.ndarray,
    tri: TriMesh,
    vertex_class: int,
    features: Optional[FeatureSet] = None,
    search_scale: float = 10.0,
) -> np.ndarray:
    return SurfaceProjector(tri, features, search_scale).project(x, vertex_class)


def classify_boundary_vertices(
    mesh: HexMesh, tri: TriMesh, paths: Optional[PathSet] = None
) -> np.ndarray:
    """VertexClass per hex vertex.

    The boundary vertex nearest each feature corner is a corner; boundary
    vertices within a quarter of their local edge length of a feature curve
    are edge points; the other boundary vertices are face points.
    """
    features = FeatureSet.from_paths(tri, paths) if paths is not None else FeatureSet.from_sharp_edges(tri)
    tags = np.full(mesh.n_vertices, int(VertexClass.INTERIOR), dtype=np.int64)
    b = mesh.boundary_vertices
    tags[b] = int(VertexClass.FACE)
    X = mesh.vertices[b]
    if len(features.segments):
        d = np.linalg.norm(closest_on_segments(X, features.segments) - X, axis=1)
        tags[b[d <= EDGE_TOL * local_edge_lengths(mesh)[b]]] = int(VertexClass.EDGE)
    if len(features.corners) and len(b):
        _, nearest = cKDTree(X).query(features.corners)
        tags[b[np.atleast_1d(nearest)]] = int(VertexClass.CORNER)
    counts = np.bincount(tags, minlength=4)
    logger.debug(
        f"边界分类: 角点 {counts[VertexClass.CORNER]}, 边点 {counts[VertexClass.EDGE]}, "
        f"面点 {counts[VertexClass.FACE]}"
    )
    return tags
