"""
边界路径优化

Corners of the polycube are located on the segmented mesh, every polycube edge
is traced as a weighted shortest path between its two corners inside the
corridor of its two patches, and the triangle labels are rebuilt by flood
filling between the paths.
"""

from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Set, Tuple, Union

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from ..core.errors import PathError, SegmentationError
from ..core.logging import get_logger
from ..core.types import PathWeights
from ..mesh.refine import refine_faces, ring_faces
from ..mesh.surface import Edge, TriMesh, area_weighted_centroid, detect_sharp_edges, edge_key
from ..polycube.structure import PolycubeEdge, PolycubeStructure
from ..segmentation.segment import Segmentation
from .graph import EdgeGraph, shortest_path

logger = get_logger(__name__)

REFINE_RINGS = 2


@dataclass
class PathSet:
    """One vertex sequence per polycube edge (in edge order) and the corner vertices."""

    paths: List[List[int]]
    corner_map: List[int]

    def edge_keys(self, i: int) -> Set[Edge]:
        p = self.paths[i]
        return {edge_key(a, b) for a, b in zip(p, p[1:])}

    def all_edge_keys(self) -> Set[Edge]:
        keys: Set[Edge] = set()
        for i in range(len(self.paths)):
            keys |= self.edge_keys(i)
        return keys


@dataclass(frozen=True, eq=False)
class BoundaryResult:
    segmentation: Segmentation
    paths: PathSet
    mesh: TriMesh


def identify_corners(
    mesh: TriMesh, seg: Segmentation, pc: PolycubeStructure
) -> List[int]:
    """Mesh vertex per polycube corner.

    A candidate touches triangles of every patch meeting at the corner; ties
    go to the smallest summed distance to those patches' centroids. Each
    vertex serves at most one corner.
    """
    seg.check(pc.n_faces)
    face_labels = seg.face_labels
    centroids = np.array(
        [area_weighted_centroid(mesh, np.flatnonzero(face_labels == f)) for f in range(pc.n_faces)]
    )
    touches = np.zeros((pc.n_faces, mesh.n_vertices), dtype=bool)
    for k in range(3):
        touches[face_labels, mesh.faces[:, k]] = True

    corner_map: List[int] = []
    taken: Set[int] = set()
    for c, faces in enumerate(pc.corner_faces):
        ok = touches[list(faces)].all(axis=0)
        ok[list(taken)] = False
        candidates = np.flatnonzero(ok)
        if len(candidates) == 0:
            raise PathError.from_key(
                "CORNER_NOT_FOUND", "errors.path.corner_not_found", corner=c, faces=list(faces)
            )
        score = np.linalg.norm(
            mesh.vertices[candidates, None, :] - centroids[None, list(faces), :], axis=2
        ).sum(axis=1)
        best = int(candidates[int(score.argmin())])
        corner_map.append(best)
        taken.add(best)
    logger.debug(f"定位 {len(corner_map)} 个角点")
    return corner_map


def _corridor(mesh: TriMesh, face_labels: np.ndarray, faces: Sequence[int]) -> np.ndarray:
    mask = np.zeros(mesh.n_vertices, dtype=bool)
    mask[mesh.faces[np.isin(face_labels, faces)].reshape(-1)] = True
    return mask


def _split_path(path: List[int], midpoints: Dict[Edge, int]) -> List[int]:
    out = [path[0]]
    for a, b in zip(path, path[1:]):
        m = midpoints.get(edge_key(a, b))
        if m is not None:
            out.append(m)
        out.append(b)
    return out


def _trace(
    graph: EdgeGraph,
    mesh: TriMesh,
    face_labels: np.ndarray,
    paths: PathSet,
    pe: PolycubeEdge,
    weights: PathWeights,
) -> List[int]:
    allowed = _corridor(mesh, face_labels, pe.faces)
    own = {paths.corner_map[pe.start], paths.corner_map[pe.end]}
    blocked = {v for v in paths.corner_map if v not in own}
    for p in paths.paths:
        blocked.update(p[1:-1])
    return shortest_path(
        graph,
        paths.corner_map[pe.start],
        paths.corner_map[pe.end],
        weights,
        allowed=allowed,
        blocked=blocked,
    )


def optimize_boundaries(
    mesh: TriMesh,
    seg: Segmentation,
    pc: PolycubeStructure,
    weights: Optional[PathWeights] = None,
) -> BoundaryResult:
    """Trace every polycube edge in edge order and relabel the triangles.

    When a path cannot be found the faces within two rings of its corridor are
    refined 1->4 and the path is retried once; the returned mesh is then the
    refined one.
    """
    weights = weights or PathWeights()
    if not mesh.sharp_edges:
        mesh = mesh.with_sharp_edges(detect_sharp_edges(mesh, weights.sharp_angle))
    face_labels = seg.face_labels.copy()
    paths = PathSet([], identify_corners(mesh, seg, pc))
    graph = EdgeGraph.from_mesh(mesh)

    for pe in pc.edges:
        try:
            path = _trace(graph, mesh, face_labels, paths, pe, weights)
        except PathError as exc:
            logger.warning(f"多立方体边 {pe.edge_id} 无路径 ({exc}), 细分走廊后重试")
            marked = ring_faces(mesh, _corridor(mesh, face_labels, pe.faces), REFINE_RINGS)
            ref = refine_faces(mesh, marked)
            mesh = ref.mesh
            face_labels = face_labels[ref.parent]
            paths.paths = [_split_path(p, ref.midpoints) for p in paths.paths]
            graph = EdgeGraph.from_mesh(mesh)
            for p in paths.paths:
                graph.mark_used(p)
            path = _trace(graph, mesh, face_labels, paths, pe, weights)
        paths.paths.append(path)

    new_faces = flood_fill(mesh, pc, paths, face_labels)
    result = Segmentation(seg.face_to_patch[new_faces], seg.patch_to_face)
    result.check(pc.n_faces)
    changed = int((new_faces != face_labels).sum())
    logger.info(
        f"边界优化完成: {len(paths.paths)} 条路径, {changed} 个三角形改变标签, "
        f"{mesh.n_faces} 个三角形"
    )
    return BoundaryResult(result, paths, mesh)


def flood_fill(
    mesh: TriMesh,
    pc: PolycubeStructure,
    paths: PathSet,
    previous: np.ndarray,
) -> np.ndarray:
    """Polycube face per triangle from regions bounded by the paths.

    Each path seeds the triangle on its left with its left face and the one on
    its right with its right face. Regions no path touches keep the majority
    of their `previous` labels.
    """
    cut = np.zeros(len(mesh.edges), dtype=bool)
    for key in paths.all_edge_keys():
        cut[mesh.edge_index[key]] = True
    ef = mesh.edge_faces[~cut]
    graph = sparse.coo_matrix(
        (np.ones(len(ef)), (ef[:, 0], ef[:, 1])), shape=(mesh.n_faces, mesh.n_faces)
    )
    n_comp, comp = connected_components(graph, directed=False)

    region_face = np.full(n_comp, -1, dtype=np.int64)
    for pe, path in zip(pc.edges, paths.paths):
        for face, (a, b) in ((pe.left_face, (path[0], path[1])), (pe.right_face, (path[1], path[0]))):
            c = comp[mesh.directed_edge_face[(a, b)]]
            if region_face[c] < 0:
                region_face[c] = face
            elif region_face[c] != face:
                raise PathError.from_key(
                    "FLOOD_FILL_LEAKAGE",
                    "errors.path.flood_fill_leakage",
                    first=int(region_face[c]),
                    second=face,
                )

    for c in np.flatnonzero(region_face < 0):
        votes = Counter(previous[comp == c].tolist())
        region_face[c] = min(votes, key=lambda f: (-votes[f], f))
        logger.debug(f"无种子区域 {c} 归入面 {region_face[c]}")

    labels = region_face[comp]
    missing = sorted(set(range(pc.n_faces)) - set(labels.tolist()))
    if missing:
        raise SegmentationError.from_key(
            "SEGMENTATION_MISMATCH",
            "errors.segmentation.mismatch",
            detail=f"faces {missing} received no region",
        )

    for pe, path in zip(pc.edges, paths.paths):
        for a, b in zip(path, path[1:]):
            sides = (labels[mesh.directed_edge_face[(a, b)]], labels[mesh.directed_edge_face[(b, a)]])
            if sides != (pe.left_face, pe.right_face):
                raise PathError.from_key(
                    "FLOOD_FILL_LEAKAGE",
                    "errors.path.flood_fill_leakage",
                    first=int(sides[0]),
                    second=int(sides[1]),
                )
    return labels


def extract_paths(mesh: TriMesh, seg: Segmentation, pc: PolycubeStructure) -> PathSet:
    """Read the corner-to-corner boundary chains off a clean segmentation."""
    corner_map = identify_corners(mesh, seg, pc)
    corners = set(corner_map)
    labels = seg.face_labels
    dual = mesh.directed_edge_face
    step: Dict[Tuple[int, int], Dict[int, List[int]]] = {}
    for (a, b), f in dual.items():
        left, right = int(labels[f]), int(labels[dual[(b, a)]])
        if left != right:
            step.setdefault((left, right), {}).setdefault(a, []).append(b)

    paths = []
    for pe in pc.edges:
        table = step.get((pe.left_face, pe.right_face), {})
        src, dst = corner_map[pe.start], corner_map[pe.end]
        path = [src]
        while len(path) <= mesh.n_vertices:
            options = table.get(path[-1], [])
            if len(options) != 1:
                break
            path.append(options[0])
            if options[0] in corners:
                break
        if path[-1] != dst or len(path) < 2:
            raise PathError.from_key("NO_PATH", "errors.path.no_path", src=src, dst=dst)
        paths.append(path)
    return PathSet(paths, corner_map)


# -------------------------------------------------------------------- files


def save_paths(paths: PathSet, path: Union[str, Path]) -> None:
    lines = ["# polyhex boundary paths", "corners " + " ".join(str(v) for v in paths.corner_map)]
    lines.extend("path " + " ".join(str(v) for v in p) for p in paths.paths)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_paths(path: Union[str, Path]) -> PathSet:
    def bad(detail: str) -> PathError:
        return PathError.from_key("BAD_FILE", "errors.path.bad_file", detail=f"{path}: {detail}")

    rows = [
        line.split()
        for line in Path(path).read_text(encoding="utf-8").splitlines()
        if line.strip() and not line.startswith("#")
    ]
    if not rows or rows[0][0] != "corners":
        raise bad("missing corners line")
    try:
        corner_map = [int(t) for t in rows[0][1:]]
        paths = []
        for row in rows[1:]:
            if row[0] != "path" or len(row) < 3:
                raise bad(f"unexpected line {' '.join(row)}")
            paths.append([int(t) for t in row[1:]])
    except ValueError:
        raise bad("non-integer vertex index") from None
    return PathSet(paths, corner_map)
