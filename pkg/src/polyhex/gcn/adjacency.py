"""
Symmetrically normalized adjacency with self-loops.
"""

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy import sparse

from ..core.errors import ModelError


@dataclass(frozen=True, eq=False)
class NormalizedAdjacency:
    """Â = D̃^{-1/2} (A + I) D̃^{-1/2} stored as CSR."""

    matrix: sparse.csr_matrix

    @property
    def n_nodes(self) -> int:
        return self.matrix.shape[0]

    def triplets(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(row, col, value) arrays."""
        coo = self.matrix.tocoo()
        return coo.row, coo.col, coo.data

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def __matmul__(self, other: np.ndarray) -> np.ndarray:
        return self.matrix @ other


def normalize_adjacency(adjacency: sparse.spmatrix) -> NormalizedAdjacency:
    A = sparse.csr_matrix(adjacency, dtype=np.float64, copy=True)
    if A.shape[0] != A.shape[1]:
        raise ModelError.from_key(
            "DIMENSION_MISMATCH",
            "errors.model.dimension_mismatch",
            left=A.shape[0],
            right=A.shape[1],
        )
    A.data[:] = 1.0
    A_tilde = A + sparse.identity(A.shape[0], format="csr")
    d = np.asarray(A_tilde.sum(axis=1)).reshape(-1)
    scale = sparse.diags(1.0 / np.sqrt(d))
    return NormalizedAdjacency(sparse.csr_matrix(scale @ A_tilde @ scale))


def block_diagonal(parts: Sequence[NormalizedAdjacency]) -> NormalizedAdjacency:
    """One disconnected graph holding every part, node blocks in order."""
    return NormalizedAdjacency(
        sparse.csr_matrix(sparse.block_diag([p.matrix for p in parts], format="csr"))
    )
