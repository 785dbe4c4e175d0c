"""
六面体网格装配

Every boundary face of the polycube is cut into lattice rectangles; each
rectangle of the segmented surface is mapped onto [0, w] x [0, h] and sampled
on the octree lattice. Crease and split polylines are sampled first so all
incident rectangles share their points, then internal lattice edges, internal
facets and cube interiors are filled by transfinite interpolation.
"""

import time
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional, Set, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from ..core.errors import HexGenError
from ..core.logging import get_logger
from ..core.types import PathWeights
from ..mesh.surface import TriMesh, boundary_loops, edge_key, patch_euler
from ..mesh.volume import HexMesh, VertexClass
from ..pathopt.boundaries import PathSet, extract_paths
from ..pathopt.graph import EdgeGraph, shortest_path
from ..polycube.structure import (
    BoundaryFace,
    LatticePoint,
    PolycubeStructure,
    Rect,
    frame_point,
    lattice_edge,
)
from ..segmentation.segment import Segmentation
from .octree import FineKey, OctreeGrid, transfinite
from .param import (
    PatchParam,
    anchored_boundary,
    disk_boundary,
    harmonic_uv,
    sample_surface_points,
)

logger = get_logger(__name__)

WELD_TOL = 1e-6  # of the bounding-box diagonal

LatticeEdge = Tuple[LatticePoint, LatticePoint]


@dataclass(frozen=True, eq=False)
class RectPatch:
    face_id: int
    rect: Rect
    triangles: np.ndarray
    param: PatchParam


@dataclass(frozen=True, eq=False)
class SurfaceLayout:
    """Mesh polylines of the unit lattice edges and the rectangle parameterizations.

    `polylines[(p, q)]` runs from lattice point p to q with p < q.
    """

    polylines: Dict[LatticeEdge, List[int]]
    creases: FrozenSet[LatticeEdge]
    lattice_vertex: Dict[LatticePoint, int]
    rects: Tuple[RectPatch, ...]

    def polyline(self, p: LatticePoint, q: LatticePoint) -> List[int]:
        return _oriented(self.polylines, p, q)


def _oriented(polylines: Dict[LatticeEdge, List[int]], p: LatticePoint, q: LatticePoint) -> List[int]:
    line = polylines[lattice_edge(p, q)]
    return list(line) if p < q else list(reversed(line))


def snap_ticks(points: np.ndarray, steps: int, edge: object) -> List[int]:
    """Path indices of the lattice points along a path, by arc-length fraction.

    Indices are strictly increasing, first 0 and last len(points) - 1.
    """
    last = len(points) - 1
    if last < steps:
        raise HexGenError.from_key(
            "PATH_TOO_COARSE",
            "errors.hexgen.path_too_coarse",
            edge=edge,
            vertices=len(points),
            steps=steps,
        )
    s = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(points, axis=0), axis=1))])
    s = s / s[-1] if s[-1] > 0.0 else np.linspace(0.0, 1.0, len(points))
    ticks = [0]
    for t in range(1, steps):
        i = int(np.abs(s - t / steps).argmin())
        ticks.append(min(max(i, ticks[-1] + 1), last - (steps - t)))
    ticks.append(last)
    return ticks


def _store(
    polylines: Dict[LatticeEdge, List[int]],
    lattice_vertex: Dict[LatticePoint, int],
    points: Tuple[LatticePoint, ...],
    path: List[int],
    ticks: List[int],
) -> None:
    for t, (p, q) in enumerate(zip(points, points[1:])):
        seg = path[ticks[t] : ticks[t + 1] + 1]
        polylines[lattice_edge(p, q)] = seg if p < q else seg[::-1]
    for t, p in enumerate(points):
        lattice_vertex[p] = path[ticks[t]]


def _split_chains(face: BoundaryFace) -> List[Tuple[int, int, int]]:
    """(v, u_start, u_end) runs of horizontal lattice edges between two rectangles."""
    owner: Dict[Tuple[int, int], int] = {}
    for r, (u0, v0, u1, v1) in enumerate(face.rectangles):
        for u in range(u0, u1):
            for v in range(v0, v1):
                owner[(u, v)] = r
    edges = sorted(
        (v, u)
        for (u, v), r in owner.items()
        if (u, v - 1) in owner and owner[(u, v - 1)] != r
    )
    chains: List[Tuple[int, int, int]] = []
    for v, u in edges:
        if chains and chains[-1][0] == v and chains[-1][2] == u:
            chains[-1] = (v, chains[-1][1], u + 1)
        else:
            chains.append((v, u, u + 1))
    return chains


def _rect_loop(rect: Rect) -> List[Tuple[int, int]]:
    """Counter-clockwise face-frame lattice points around a rectangle from (u0, v0)."""
    u0, v0, u1, v1 = rect
    return (
        [(u, v0) for u in range(u0, u1)]
        + [(u1, v) for v in range(v0, v1)]
        + [(u, v1) for u in range(u1, u0, -1)]
        + [(u0, v) for v in range(v1, v0, -1)]
    )


def _cyclic_equal(a: List[int], b: List[int]) -> bool:
    if len(a) != len(b) or not a or a[0] not in b:
        return False
    k = b.index(a[0])
    return b[k:] + b[:k] == a


def layout_surface(
    mesh: TriMesh,
    seg: Segmentation,
    pc: PolycubeStructure,
    paths: Optional[PathSet] = None,
    weights: Optional[PathWeights] = None,
) -> SurfaceLayout:
    """Cut every patch into its lattice rectangles and parameterize each one."""
    weights = weights or PathWeights()
    seg.check(pc.n_faces)
    if paths is None:
        paths = extract_paths(mesh, seg, pc)
    face_labels = seg.face_labels

    polylines: Dict[LatticeEdge, List[int]] = {}
    lattice_vertex: Dict[LatticePoint, int] = {}
    for pe, path in zip(pc.edges, paths.paths):
        ticks = snap_ticks(mesh.vertices[path], pe.length, pe.edge_id)
        _store(polylines, lattice_vertex, pe.points, list(path), ticks)
    creases = frozenset(polylines)

    graph = EdgeGraph.from_mesh(mesh)
    on_crease: Set[int] = set()
    for line in polylines.values():
        graph.mark_used(line)
        on_crease.update(line)

    rects: List[RectPatch] = []
    for face in pc.boundary_faces:
        tris = np.flatnonzero(face_labels == face.face_id)
        if len(face.rectangles) > 1:
            allowed = np.zeros(mesh.n_vertices, dtype=bool)
            allowed[mesh.faces[tris].reshape(-1)] = True
            for v, ua, ub in _split_chains(face):
                points = tuple(face.point(u, v) for u in range(ua, ub + 1))
                for p in (points[0], points[-1]):
                    if p not in lattice_vertex:
                        raise HexGenError.from_key("MISSING_POINT", "errors.hexgen.missing_point", key=p)
                src, dst = lattice_vertex[points[0]], lattice_vertex[points[-1]]
                line = shortest_path(
                    graph, src, dst, weights, allowed=allowed, blocked=on_crease - {src, dst}
                )
                ticks = snap_ticks(mesh.vertices[line], ub - ua, f"{face.face_id}@v={v}")
                _store(polylines, lattice_vertex, points, line, ticks)
                on_crease.update(line)
        rects.extend(_parameterize_face(mesh, face, tris, polylines))

    logger.info(
        f"表面布局: {len(rects)} 个矩形, {len(polylines)} 条单位折线 "
        f"({len(creases)} 条在折边上)"
    )
    return SurfaceLayout(polylines, creases, lattice_vertex, tuple(rects))


def _parameterize_face(
    mesh: TriMesh,
    face: BoundaryFace,
    tris: np.ndarray,
    polylines: Dict[LatticeEdge, List[int]],
) -> List[RectPatch]:
    cut = np.zeros(len(mesh.edges), dtype=bool)
    for line in polylines.values():
        cut[[mesh.edge_index[edge_key(a, b)] for a, b in zip(line, line[1:])]] = True
    inside = np.zeros(mesh.n_faces, dtype=bool)
    inside[tris] = True
    ef = mesh.edge_faces
    keep = inside[ef[:, 0]] & inside[ef[:, 1]] & ~cut
    e = ef[keep]
    adjacency = sparse.coo_matrix(
        (np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(mesh.n_faces, mesh.n_faces)
    )
    _, comp = connected_components(adjacency, directed=False)

    out = []
    for rect in face.rectangles:
        u0, v0, u1, v1 = rect
        corners = _rect_loop(rect)
        loop: List[int] = []
        anchors: Dict[int, np.ndarray] = {}
        for k, (u, v) in enumerate(corners):
            nu, nv = corners[(k + 1) % len(corners)]
            line = _oriented(polylines, face.point(u, v), face.point(nu, nv))
            anchors[len(loop)] = np.array([u - u0, v - v0], dtype=np.float64)
            loop.extend(line[:-1])

        seed = mesh.directed_edge_face[(loop[0], loop[1])]
        members = tris[comp[tris] == comp[seed]] if inside[seed] else np.zeros(0, np.int64)
        if len(members) == 0 or not _cyclic_equal(loop, disk_boundary(mesh, members)):
            sub = mesh.faces[members]
            raise HexGenError.from_key(
                "NOT_DISK",
                "errors.hexgen.not_disk",
                chi=patch_euler(sub),
                loops=len(boundary_loops(sub)),
                face=face.face_id,
                rect=rect,
            )
        boundary_uv = anchored_boundary(mesh.vertices, loop, anchors)
        param = harmonic_uv(mesh, members, boundary_uv, face.face_id, (float(u1 - u0), float(v1 - v0)))
        out.append(RectPatch(face.face_id, rect, members, param))
    return out


class _Placement:
    """Sampled positions keyed by fine lattice coordinates."""

    def __init__(self, tol: float) -> None:
        self.tol = tol
        self.positions: Dict[FineKey, np.ndarray] = {}
        self.tags: Dict[FineKey, int] = {}

    def put(self, key: FineKey, x: np.ndarray, tag: VertexClass) -> None:
        old = self.positions.get(key)
        if old is None:
            self.positions[key] = np.asarray(x, dtype=np.float64)
            self.tags[key] = int(tag)
        elif float(np.linalg.norm(old - x)) > self.tol:
            raise HexGenError.from_key("WELD_FAILURE", "errors.hexgen.weld_failure", key=key)

    def fill(self, keys: np.ndarray) -> None:
        """Blend the missing samples of a key block from its boundary."""
        flat = [tuple(int(c) for c in k) for k in keys.reshape(-1, 3)]
        nan = np.full(3, np.nan)
        vals = np.array([self.positions.get(k, nan) for k in flat]).reshape(keys.shape)
        missing = np.isnan(vals[..., 0]).reshape(-1)
        if not missing.any():
            return
        blended = transfinite(vals).reshape(-1, 3)
        for i in np.flatnonzero(missing):
            if np.isnan(blended[i]).any():
                raise HexGenError.from_key("MISSING_POINT", "errors.hexgen.missing_point", key=flat[i])
            self.positions[flat[i]] = blended[i]
            self.tags[flat[i]] = int(VertexClass.INTERIOR)


def _cube_lines(K: np.ndarray) -> List[np.ndarray]:
    out = []
    for a in (0, -1):
        for b in (0, -1):
            out.extend([K[:, a, b], K[a, :, b], K[a, b, :]])
    return out


def _cube_facets(K: np.ndarray) -> List[np.ndarray]:
    return [K[0], K[-1], K[:, 0], K[:, -1], K[:, :, 0], K[:, :, -1]]


def assemble_hex_mesh(
    mesh: TriMesh,
    seg: Segmentation,
    pc: PolycubeStructure,
    level: int,
    paths: Optional[PathSet] = None,
    weights: Optional[PathWeights] = None,
) -> HexMesh:
    """All-hex mesh with 8**level elements per polycube cube."""
    started = time.perf_counter()
    grid = OctreeGrid(level)
    n = grid.resolution
    layout = layout_surface(mesh, seg, pc, paths, weights)
    place = _Placement(WELD_TOL * mesh.bbox_diagonal)
    corner_keys = {grid.fine(p) for p in pc.corners}

    ordered = sorted(layout.polylines, key=lambda k: (k not in layout.creases, k))
    for p, q in ordered:
        pts = mesh.vertices[layout.polylines[(p, q)]]
        s = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(pts, axis=0), axis=1))])
        s = s / s[-1]
        xs = np.column_stack([np.interp(grid.samples, s, pts[:, c]) for c in range(3)])
        fp, step = np.array(grid.fine(p)), np.array(q) - np.array(p)
        for j in range(n + 1):
            key = tuple(int(c) for c in fp + j * step)
            if key in corner_keys:
                tag = VertexClass.CORNER
            elif (p, q) in layout.creases:
                tag = VertexClass.EDGE
            else:
                tag = VertexClass.FACE
            place.put(key, xs[j], tag)  # type: ignore[arg-type]

    for rp in layout.rects:
        face = pc.boundary_faces[rp.face_id]
        u0, v0, u1, v1 = rp.rect
        U, V = np.meshgrid(np.arange(u0 * n, u1 * n + 1), np.arange(v0 * n, v1 * n + 1), indexing="ij")
        U, V = U.reshape(-1), V.reshape(-1)
        uv = np.column_stack([U / n - u0, V / n - v0])
        xs = sample_surface_points(rp.param, uv)
        for Ui, Vi, x in zip(U.tolist(), V.tolist(), xs):
            place.put(frame_point(face.label, face.plane * n, Ui, Vi), x, VertexClass.FACE)

    blocks = [grid.cube_keys(c) for c in pc.cubes]
    for K in blocks:
        for line in _cube_lines(K):
            place.fill(line)
    for K in blocks:
        for facet in _cube_facets(K):
            place.fill(facet)
    for K in blocks:
        place.fill(K)

    keys = sorted(place.positions)
    index = {k: i for i, k in enumerate(keys)}
    vertices = np.array([place.positions[k] for k in keys])
    tags = np.array([place.tags[k] for k in keys], dtype=np.int64)
    elements = []
    for K in blocks:
        I = np.array([index[tuple(int(c) for c in k)] for k in K.reshape(-1, 3)]).reshape(K.shape[:3])
        elements.append(
            np.stack(
                [
                    I[:-1, :-1, :-1], I[1:, :-1, :-1], I[1:, 1:, :-1], I[:-1, 1:, :-1],
                    I[:-1, :-1, 1:], I[1:, :-1, 1:], I[1:, 1:, 1:], I[:-1, 1:, 1:],
                ],
                axis=-1,
            ).reshape(-1, 8)
        )  # fmt: skip
    hexes = HexMesh(vertices, np.concatenate(elements), tags)
    hexes.validate()
    logger.info(
        f"六面体网格: {hexes.n_elements} 个单元, {hexes.n_vertices} 个顶点 "
        f"(层级 {level}, {len(pc.cubes)} 个立方体), 用时 {time.perf_counter() - started:.2f}s"
    )
    return hexes
