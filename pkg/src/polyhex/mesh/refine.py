"""
Red-green refinement of triangle meshes.

Marked triangles are split 1->4 at their edge midpoints; neighbours left with a
single split edge are bisected so the result stays conforming. Existing vertex
indices are preserved and new midpoints are appended.
"""

from dataclasses import dataclass
from typing import Dict, List

import numpy as np

from ..core.logging import get_logger
from .surface import Edge, TriMesh, edge_key

logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class Refinement:
    mesh: TriMesh
    parent: np.ndarray  # new face -> face of the input mesh
    midpoints: Dict[Edge, int]  # split input edge -> new vertex


def refine_faces(mesh: TriMesh, marked: np.ndarray) -> Refinement:
    """Split marked faces 1->4 and close the refinement with green bisections."""
    red = np.asarray(marked, dtype=bool).copy()
    fe = mesh.face_edges
    split = np.zeros(len(mesh.edges), dtype=bool)
    while True:
        split[fe[red].reshape(-1)] = True
        count = split[fe].sum(axis=1)
        promote = ~red & (count >= 2)
        if not promote.any():
            break
        red |= promote

    split_ids = np.flatnonzero(split)
    mid_of = np.full(len(mesh.edges), -1, dtype=np.int64)
    mid_of[split_ids] = mesh.n_vertices + np.arange(len(split_ids))
    e = mesh.edges[split_ids]
    new_vertices = np.concatenate(
        [mesh.vertices, 0.5 * (mesh.vertices[e[:, 0]] + mesh.vertices[e[:, 1]])]
    )

    faces: List[tuple] = []
    parent: List[int] = []
    for f, (tri, edge_ids) in enumerate(zip(mesh.faces.tolist(), fe.tolist())):
        mids = [int(mid_of[k]) for k in edge_ids]
        a, b, c = tri
        if red[f]:
            mab, mbc, mca = mids
            faces.extend([(a, mab, mca), (mab, b, mbc), (mca, mbc, c), (mab, mbc, mca)])
            parent.extend([f] * 4)
        elif max(mids) >= 0:
            k = next(i for i, mid in enumerate(mids) if mid >= 0)
            v0, v1, v2 = tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]
            faces.extend([(v0, mids[k], v2), (mids[k], v1, v2)])
            parent.extend([f] * 2)
        else:
            faces.append((a, b, c))
            parent.append(f)

    midpoints = {
        (int(lo), int(hi)): int(mid_of[k]) for k, (lo, hi) in zip(split_ids, e)
    }
    sharp = set()
    for a, b in mesh.sharp_edges:
        m = midpoints.get(edge_key(a, b))
        if m is None:
            sharp.add((a, b))
        else:
            sharp.update((edge_key(a, m), edge_key(m, b)))

    refined = TriMesh(new_vertices, np.array(faces), frozenset(sharp))
    logger.debug(
        f"细分 {int(red.sum())} 个三角形: {mesh.n_faces} -> {refined.n_faces} 面"
    )
    return Refinement(refined, np.array(parent, dtype=np.int64), midpoints)


def refine_uniform(mesh: TriMesh, times: int = 1) -> TriMesh:
    """Split every face 1->4, `times` times."""
    for _ in range(times):
        mesh = refine_faces(mesh, np.ones(mesh.n_faces, dtype=bool)).mesh
    return mesh


def ring_faces(mesh: TriMesh, vertex_mask: np.ndarray, rings: int) -> np.ndarray:
    """Faces touching the marked vertices, grown by `rings` vertex rings."""
    mask = np.asarray(vertex_mask, dtype=bool).copy()
    adj = mesh.vertex_adjacency
    for _ in range(rings):
        mask = mask | (adj @ mask.astype(np.int64) > 0)
    return mask[mesh.faces].any(axis=1)
