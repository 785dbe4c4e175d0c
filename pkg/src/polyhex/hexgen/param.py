"""
Harmonic parameterization of disk patches onto axis-aligned rectangles.

The boundary loop is pinned to the rectangle by arc length between anchor
vertices; interior vertices solve the cotangent Laplace equation. A patch
whose cotangent map folds over is solved again with uniform weights.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Dict, List, Literal, Mapping, Sequence, Tuple

import numpy as np
import trimesh
from scipy import sparse
from scipy.sparse.linalg import spsolve

from ..core.errors import HexGenError
from ..core.logging import get_logger
from ..mesh.surface import TriMesh, boundary_loops, patch_euler

logger = get_logger(__name__)

COT_FLOOR = 1e-6
RESIDUAL_TOL = 1e-10
SNAP_TOL = 1e-9

Weighting = Literal["cotangent", "uniform"]


@dataclass(frozen=True, eq=False)
class PatchParam:
    """UV coordinates of one patch.

    Attributes:
        patch_id: polycube face the patch belongs to.
        vertices: (n,) global mesh vertex ids; row i of `uv` and `positions`.
        faces: (k, 3) triangles in local vertex ids.
        uv: (n, 2) coordinates in [0, w] x [0, h].
        positions: (n, 3) mesh positions.
        size: (w, h) of the target rectangle.
        weighting: Laplacian weights that produced `uv`.
    """

    patch_id: int
    vertices: np.ndarray
    faces: np.ndarray
    uv: np.ndarray
    positions: np.ndarray
    size: Tuple[float, float]
    weighting: Weighting = "cotangent"

    @cached_property
    def uv_areas(self) -> np.ndarray:
        return signed_uv_areas(self.uv, self.faces)

    @cached_property
    def _embedded(self) -> trimesh.Trimesh:
        flat = np.column_stack([self.uv, np.zeros(len(self.uv))])
        return trimesh.Trimesh(flat, self.faces, process=False, validate=False)

    @cached_property
    def _query(self) -> trimesh.proximity.ProximityQuery:
        return trimesh.proximity.ProximityQuery(self._embedded)


def signed_uv_areas(uv: np.ndarray, faces: np.ndarray) -> np.ndarray:
    a, b, c = uv[faces[:, 0]], uv[faces[:, 1]], uv[faces[:, 2]]
    return 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))


def disk_boundary(mesh: TriMesh, face_ids: np.ndarray) -> List[int]:
    """The single boundary loop of a disk patch, patch on its left."""
    faces = mesh.faces[np.asarray(face_ids, dtype=np.int64)]
    chi = patch_euler(faces)
    loops = boundary_loops(faces)
    if chi != 1 or len(loops) != 1 or len(set(loops[0])) != len(loops[0]):
        raise HexGenError.from_key("NOT_DISK", "errors.hexgen.not_disk", chi=chi, loops=len(loops))
    return loops[0]


def anchored_boundary(
    positions: np.ndarray, loop: Sequence[int], anchors: Mapping[int, np.ndarray]
) -> Dict[int, np.ndarray]:
    """UV for every loop vertex, linear in arc length between consecutive anchors.

    `anchors` maps positions in `loop` to UV; they are visited in loop order.
    """
    loop = list(loop)
    marks = sorted(anchors)
    if len(marks) < 3:
        raise HexGenError.from_key("SEGMENTS", "errors.hexgen.segments", count=len(marks))
    out: Dict[int, np.ndarray] = {}
    for k, start in enumerate(marks):
        stop = marks[(k + 1) % len(marks)]
        span = loop[start : stop + 1] if stop > start else loop[start:] + loop[: stop + 1]
        pts = positions[span]
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        s = np.concatenate([[0.0], np.cumsum(seg)])
        t = s / s[-1] if s[-1] > 0.0 else np.linspace(0.0, 1.0, len(s))
        a, b = np.asarray(anchors[start], float), np.asarray(anchors[stop], float)
        for v, ti in zip(span[:-1], t[:-1]):
            out[int(v)] = (1.0 - ti) * a + ti * b
    return out


def map_patch_boundary(
    mesh: TriMesh,
    face_ids: np.ndarray,
    corners: Sequence[int],
    size: Tuple[float, float] = (1.0, 1.0),
) -> Dict[int, np.ndarray]:
    """Pin a disk patch's boundary to the rectangle [0, w] x [0, h].

    The four corner vertices, in counter-clockwise order, go to (0,0), (w,0),
    (w,h), (0,h); each boundary segment is spread by arc length.
    """
    loop = disk_boundary(mesh, face_ids)
    where = {v: i for i, v in enumerate(loop)}
    found = [where[c] for c in corners if c in where]
    if len(corners) != 4 or len(found) != 4:
        raise HexGenError.from_key("SEGMENTS", "errors.hexgen.segments", count=len(found))
    shift = found[0]
    rel = [(p - shift) % len(loop) for p in found]
    if rel != sorted(rel):
        raise HexGenError.from_key("CORNER_ORDER", "errors.hexgen.corner_order")
    w, h = size
    square = [(0.0, 0.0), (w, 0.0), (w, h), (0.0, h)]
    return anchored_boundary(
        mesh.vertices, loop, {p: np.array(uv) for p, uv in zip(found, square)}
    )


def _weights(positions: np.ndarray, faces: np.ndarray, weighting: Weighting) -> sparse.csr_matrix:
    n = len(positions)
    rows, cols, vals = [], [], []
    for k in range(3):
        i, j, o = faces[:, (k + 1) % 3], faces[:, (k + 2) % 3], faces[:, k]
        if weighting == "cotangent":
            a = positions[i] - positions[o]
            b = positions[j] - positions[o]
            cross = np.linalg.norm(np.cross(a, b), axis=1)
            w = 0.5 * np.einsum("ij,ij->i", a, b) / np.where(cross > 0.0, cross, np.inf)
        else:
            w = np.ones(len(faces))
        rows.extend([i, j])
        cols.extend([j, i])
        vals.extend([w, w])
    W = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    ).tocsr()
    W.sum_duplicates()
    if weighting == "cotangent":
        W.data = np.maximum(W.data, COT_FLOOR)
    return W


def _solve(
    positions: np.ndarray,
    faces: np.ndarray,
    fixed: np.ndarray,
    fixed_uv: np.ndarray,
    weighting: Weighting,
) -> np.ndarray:
    n = len(positions)
    W = _weights(positions, faces, weighting)
    L = sparse.diags(np.asarray(W.sum(axis=1)).ravel()) - W
    free = np.setdiff1d(np.arange(n), fixed)
    uv = np.zeros((n, 2))
    uv[fixed] = fixed_uv
    if len(free) == 0:
        return uv
    L = L.tocsr()
    A = L[free][:, free].tocsc()
    rhs = -(L[free][:, fixed] @ fixed_uv)
    x = spsolve(A, rhs)
    x = np.asarray(x).reshape(len(free), 2)
    residual = float(np.abs(A @ x - rhs).max()) if np.isfinite(x).all() else float("inf")
    if not residual < RESIDUAL_TOL * max(1.0, float(np.abs(rhs).max())):
        raise HexGenError.from_key("SINGULAR", "errors.hexgen.singular", residual=residual)
    uv[free] = x
    return uv


def harmonic_uv(
    mesh: TriMesh,
    face_ids: np.ndarray,
    boundary_uv: Mapping[int, np.ndarray],
    patch_id: int = 0,
    size: Tuple[float, float] = (1.0, 1.0),
) -> PatchParam:
    """Solve the interior UV of a patch with its boundary fixed."""
    tri = mesh.faces[np.asarray(face_ids, dtype=np.int64)]
    vertices, local = np.unique(tri, return_inverse=True)
    faces = local.reshape(-1, 3)
    positions = mesh.vertices[vertices]
    slot = {int(v): i for i, v in enumerate(vertices)}
    fixed = np.array([slot[v] for v in boundary_uv], dtype=np.int64)
    fixed_uv = np.array([boundary_uv[v] for v in boundary_uv], dtype=np.float64).reshape(-1, 2)

    for weighting in ("cotangent", "uniform"):
        uv = _solve(positions, faces, fixed, fixed_uv, weighting)  # type: ignore[arg-type]
        folded = int((signed_uv_areas(uv, faces) <= 0.0).sum())
        if folded == 0:
            return PatchParam(patch_id, vertices, faces, uv, positions, size, weighting)  # type: ignore[arg-type]
        logger.warning(f"面片 {patch_id} 的{weighting}参数化有 {folded} 个翻转三角形")
    raise HexGenError.from_key("FOLD_OVER", "errors.hexgen.fold_over", patch=patch_id, count=folded)


def sample_surface_points(param: PatchParam, uv: np.ndarray) -> np.ndarray:
    """3D points at (P, 2) UV locations by barycentric lookup in the UV mesh.

    Locations outside every UV triangle are snapped to the nearest one.
    """
    uv = np.atleast_2d(np.asarray(uv, dtype=np.float64))
    query = np.column_stack([uv, np.zeros(len(uv))])
    closest, distance, tri = param._query.on_surface(query)
    far = int((distance > SNAP_TOL).sum())
    if far:
        logger.debug(f"面片 {param.patch_id}: {far} 个采样点吸附到最近三角形")
    corners = param._embedded.vertices[param.faces[tri]]
    bary = trimesh.triangles.points_to_barycentric(corners, closest)
    return np.einsum("ij,ijk->ik", bary, param.positions[param.faces[tri]])


def sample_surface_point(param: PatchParam, uv: Sequence[float]) -> np.ndarray:
    return sample_surface_points(param, np.asarray(uv, dtype=np.float64).reshape(1, 2))[0]
