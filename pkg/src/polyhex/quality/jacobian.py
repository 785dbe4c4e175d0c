"""
Scaled Jacobian of hexahedra.

Each element is evaluated at its eight corners and at its body center. A
corner uses the three edges leaving it in right-handed order; the center uses
the differences of opposite face centers. Every frame is written as a fixed
linear combination of the eight vertices (`FRAME_COEFFS`) so values and
gradients share one table.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Tuple, Union

import numpy as np

from ..core.logging import get_logger
from ..mesh.volume import HexMesh

logger = get_logger(__name__)

CORNER_NEIGHBORS = np.array(
    [
        (1, 3, 4), (2, 0, 5), (3, 1, 6), (0, 2, 7),
        (7, 5, 0), (4, 6, 1), (5, 7, 2), (6, 4, 3),
    ],
    dtype=np.int64,
)  # fmt: skip
FACE_PLUS = np.array([(1, 2, 6, 5), (2, 3, 7, 6), (4, 5, 6, 7)], dtype=np.int64)
FACE_MINUS = np.array([(0, 3, 7, 4), (0, 1, 5, 4), (0, 1, 2, 3)], dtype=np.int64)
N_LOCATIONS = 9


def _frame_coeffs() -> np.ndarray:
    C = np.zeros((N_LOCATIONS, 3, 8))
    for c in range(8):
        for k, nb in enumerate(CORNER_NEIGHBORS[c]):
            C[c, k, nb] += 1.0
            C[c, k, c] -= 1.0
    for k in range(3):
        C[8, k, FACE_PLUS[k]] += 0.25
        C[8, k, FACE_MINUS[k]] -= 0.25
    return C


FRAME_COEFFS = _frame_coeffs()  # (location, edge, vertex)


def frame_vectors(points: np.ndarray) -> np.ndarray:
    """(m, 9, 3, 3) edge vectors (rows) per element and location for (m, 8, 3) points."""
    return np.einsum("lkv,mvd->mlkd", FRAME_COEFFS, points)


def _normalized(frames: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    lengths = np.linalg.norm(frames, axis=-1)
    degenerate = (lengths == 0.0).any(axis=-1)
    unit = frames / np.where(lengths > 0.0, lengths, 1.0)[..., None]
    return unit, lengths, degenerate


def jacobians(points: np.ndarray) -> np.ndarray:
    """(m, 9) determinants of the raw edge frames."""
    return np.linalg.det(frame_vectors(points))


def scaled_jacobians(points: np.ndarray) -> np.ndarray:
    """(m, 9) determinants of unit edge frames; -1 where an edge has zero length."""
    unit, _, degenerate = _normalized(frame_vectors(points))
    sj = np.clip(np.linalg.det(unit), -1.0, 1.0)
    return np.where(degenerate, -1.0, sj)


def scaled_jacobian(element: np.ndarray) -> Tuple[np.ndarray, float]:
    """Values at the 8 corners and the center of one (8, 3) element, and their min."""
    values = scaled_jacobians(np.asarray(element, dtype=np.float64).reshape(1, 8, 3))[0]
    return values, float(values.min())


def element_min_sj(vertices: np.ndarray, elements: np.ndarray) -> np.ndarray:
    if len(elements) == 0:
        return np.zeros(0)
    return scaled_jacobians(vertices[elements]).min(axis=1)


def det_gradients(frames: np.ndarray) -> np.ndarray:
    """d det / d row for (..., 3, 3) frames."""
    e0, e1, e2 = frames[..., 0, :], frames[..., 1, :], frames[..., 2, :]
    return np.stack([np.cross(e1, e2), np.cross(e2, e0), np.cross(e0, e1)], axis=-2)


def sj_gradients(frames: np.ndarray) -> np.ndarray:
    """d SJ / d row for (..., 3, 3) frames; zero where an edge is degenerate."""
    unit, lengths, degenerate = _normalized(frames)
    g = det_gradients(unit)
    radial = np.einsum("...kd,...kd->...k", g, unit)[..., None] * unit
    out = (g - radial) / np.where(lengths > 0.0, lengths, 1.0)[..., None]
    return np.where(degenerate[..., None, None], 0.0, out)


def to_vertex_gradients(row_grads: np.ndarray, locations: np.ndarray) -> np.ndarray:
    """(m, 8, 3) vertex gradients from (m, 3, 3) row gradients at one location per element."""
    C = FRAME_COEFFS[locations]  # (m, 3, 8)
    return np.einsum("mkv,mkd->mvd", C, row_grads)


@dataclass
class QualityReport:
    """Scaled-Jacobian summary of a hex mesh."""

    per_element: np.ndarray
    iterations: int = 0
    initial_min: float = float("nan")
    energy: float = float("nan")
    extra: dict = field(default_factory=dict)

    @property
    def min(self) -> float:
        return float(self.per_element.min()) if len(self.per_element) else float("nan")

    @property
    def mean(self) -> float:
        return float(self.per_element.mean()) if len(self.per_element) else float("nan")

    @property
    def n_negative(self) -> int:
        return int((self.per_element < 0.0).sum())

    @property
    def n_elements(self) -> int:
        return len(self.per_element)


def quality_report(mesh: HexMesh, iterations: int = 0) -> QualityReport:
    report = QualityReport(element_min_sj(mesh.vertices, mesh.elements), iterations)
    report.initial_min = report.min
    return report


def write_report(report: QualityReport, path: Union[str, Path]) -> None:
    lines = [
        "# polyhex quality report",
        f"elements {report.n_elements}",
        f"min_scaled_jacobian {report.min:.6f}",
        f"mean_scaled_jacobian {report.mean:.6f}",
        f"negative_elements {report.n_negative}",
        f"initial_min_scaled_jacobian {report.initial_min:.6f}",
        f"iterations {report.iterations}",
    ]
    lines.extend(f"{k} {v}" for k, v in report.extra.items())
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info(f"写出质量报告 {path}")
