"""
Free-form deformation with a trilinear control cage.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..core.errors import DatasetError
from ..core.logging import get_logger
from ..mesh.surface import DEGENERATE_AREA, TriMesh

logger = get_logger(__name__)

_CORNERS = np.array(
    [(dx, dy, dz) for dx in (0, 1) for dy in (0, 1) for dz in (0, 1)], dtype=np.int64
)


@dataclass(frozen=True, eq=False)
class DeformationCage:
    """Regular control lattice around a point set with per-point trilinear weights.

    Attributes:
        control_points: (r, r, r, 3) rest positions of the cage.
        cells: (n, 3) index of the cage cell holding each point.
        influence: (n, 8) trilinear weights of the cell corners, ordered like
            `_CORNERS`; rows are non-negative and sum to 1.
    """

    control_points: np.ndarray
    cells: np.ndarray
    influence: np.ndarray

    @property
    def resolution(self) -> int:
        return self.control_points.shape[0]

    @classmethod
    def around(cls, points: np.ndarray, resolution: int = 4, margin: float = 0.1) -> "DeformationCage":
        """Cage padded by `margin` x the largest extent on every side."""
        points = np.asarray(points, dtype=np.float64)
        lo, hi = points.min(axis=0), points.max(axis=0)
        pad = margin * float((hi - lo).max())
        lo, hi = lo - pad, hi + pad
        axes = [np.linspace(lo[a], hi[a], resolution) for a in range(3)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

        t = (points - lo) / (hi - lo) * (resolution - 1)
        cells = np.clip(np.floor(t).astype(np.int64), 0, resolution - 2)
        frac = t - cells
        w = np.where(_CORNERS[None, :, :] == 1, frac[:, None, :], 1.0 - frac[:, None, :])
        return cls(grid, cells, w.prod(axis=2))

    def corner_indices(self) -> np.ndarray:
        """(n, 8) flat control-point indices of each point's cell corners."""
        r = self.resolution
        c = self.cells[:, None, :] + _CORNERS[None, :, :]
        return (c[..., 0] * r + c[..., 1]) * r + c[..., 2]

    def apply(self, points: np.ndarray, displacements: np.ndarray) -> np.ndarray:
        """Move points by the trilinear interpolation of control displacements."""
        disp = np.asarray(displacements, dtype=np.float64).reshape(-1, 3)
        offset = np.einsum("nk,nkd->nd", self.influence, disp[self.corner_indices()])
        return np.asarray(points, dtype=np.float64) + offset


def _acceptable(mesh: TriMesh, vertices: np.ndarray) -> Tuple[bool, str]:
    t = vertices[mesh.faces]
    cross = np.cross(t[:, 1] - t[:, 0], t[:, 2] - t[:, 0])
    area = 0.5 * np.linalg.norm(cross, axis=1)
    diag = float(np.linalg.norm(vertices.max(axis=0) - vertices.min(axis=0)))
    if (area <= DEGENERATE_AREA * diag**2).any():
        return False, "degenerate face"
    before = mesh.face_normals * (2.0 * mesh.face_areas)[:, None]
    if (np.einsum("ij,ij->i", cross, before) <= 0.0).any():
        return False, "flipped face"
    return True, ""


def random_deform(
    mesh: TriMesh,
    cage_resolution: int = 4,
    sigma: float = 0.08,
    rng_seed: int = 0,
    perturb_fraction: float = 0.3,
    margin: float = 0.1,
    max_attempts: int = 100,
) -> TriMesh:
    """Displace a random subset of cage points by N(0, sigma x bbox diagonal) vectors.

    Draws are resampled until no face degenerates or flips.
    """
    rng = np.random.default_rng(rng_seed)
    cage = DeformationCage.around(mesh.vertices, cage_resolution, margin)
    n_ctrl = cage_resolution**3
    scale = sigma * mesh.bbox_diagonal

    for attempt in range(1, max_attempts + 1):
        chosen = rng.random(n_ctrl) < perturb_fraction
        disp = rng.normal(0.0, 1.0, size=(n_ctrl, 3)) * scale * chosen[:, None]
        moved = cage.apply(mesh.vertices, disp)
        ok, reason = _acceptable(mesh, moved)
        if ok:
            if attempt > 1:
                logger.debug(f"变形种子 {rng_seed}: 第 {attempt} 次尝试成功")
            return TriMesh(moved, mesh.faces, mesh.sharp_edges)
        logger.debug(f"变形种子 {rng_seed}: 第 {attempt} 次被拒绝 ({reason})")

    raise DatasetError.from_key(
        "DEFORMATION_FAILED", "errors.dataset.deformation_failed", attempts=max_attempts
    )
