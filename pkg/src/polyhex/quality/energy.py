"""
Mesh-quality energy.

    E = sum_b |x_b - x_b^s|^2
        - (1 / lbar) * sum over elements with min J < 0 of min J
        - lbar^2 * sum over the other elements of min SJ

`lbar` is the mean length of the three edges at every corner frame of the
mesh. Each element contributes through its minimizing location only, so the
gradient is exact wherever that location does not switch.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..mesh.volume import HexMesh
from .jacobian import (
    det_gradients,
    frame_vectors,
    scaled_jacobians,
    sj_gradients,
    to_vertex_gradients,
)


@dataclass
class EnergyState:
    fitting: float
    jacobian_term: float
    sj_term: float
    lbar: float
    nn_s: int  # boundary vertices with targets
    ne_n: int  # elements with a negative Jacobian
    ne_p: int
    nn: int

    @property
    def total(self) -> float:
        return self.fitting + self.jacobian_term + self.sj_term


def mean_corner_edge_length(vertices: np.ndarray, elements: np.ndarray) -> float:
    frames = frame_vectors(vertices[elements])[:, :8]
    return float(np.linalg.norm(frames, axis=-1).mean())


def element_terms(
    points: np.ndarray, lbar: float
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-element energy, (m, 8, 3) vertex gradients and the negative-Jacobian mask."""
    frames = frame_vectors(points)
    J = np.linalg.det(frames)
    SJ = scaled_jacobians(points)
    m = len(points)
    rows = np.arange(m)
    j_loc = J.argmin(axis=1)
    s_loc = SJ.argmin(axis=1)
    negative = J[rows, j_loc] < 0.0

    values = np.where(negative, -J[rows, j_loc] / lbar, -(lbar**2) * SJ[rows, s_loc])
    grads = np.zeros((m, 8, 3))
    if negative.any():
        idx = np.flatnonzero(negative)
        g = det_gradients(frames[idx, j_loc[idx]])
        grads[idx] = -to_vertex_gradients(g, j_loc[idx]) / lbar
    if (~negative).any():
        idx = np.flatnonzero(~negative)
        g = sj_gradients(frames[idx, s_loc[idx]])
        grads[idx] = -(lbar**2) * to_vertex_gradients(g, s_loc[idx])
    return values, grads, negative


def energy(
    mesh: HexMesh,
    boundary: np.ndarray,
    targets: np.ndarray,
    lbar: Optional[float] = None,
) -> EnergyState:
    """Evaluate E with surface targets (B, 3) for the vertices `boundary` (B,)."""
    X = mesh.vertices
    lbar = mean_corner_edge_length(X, mesh.elements) if lbar is None else lbar
    values, _, negative = element_terms(X[mesh.elements], lbar)
    diff = X[boundary] - targets
    return EnergyState(
        fitting=float(np.einsum("ij,ij->", diff, diff)),
        jacobian_term=float(values[negative].sum()),
        sj_term=float(values[~negative].sum()),
        lbar=lbar,
        nn_s=len(boundary),
        ne_n=int(negative.sum()),
        ne_p=int((~negative).sum()),
        nn=mesh.n_vertices,
    )


def energy_gradient(
    mesh: HexMesh,
    boundary: np.ndarray,
    targets: np.ndarray,
    lbar: float,
) -> np.ndarray:
    """(n, 3) dE/dx with `lbar` and the targets held fixed."""
    X = mesh.vertices
    _, grads, _ = element_terms(X[mesh.elements], lbar)
    out = np.zeros_like(X)
    np.add.at(out, mesh.elements.reshape(-1), grads.reshape(-1, 3))
    out[boundary] += 2.0 * (X[boundary] - targets)
    return out
