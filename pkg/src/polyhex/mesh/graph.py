"""
Dual graph of a triangle mesh, the input of the graph convolutional networks.
"""

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .surface import TriMesh

NODE_FEATURES = 12


@dataclass(frozen=True, eq=False)
class FaceGraph:
    """Faces as nodes, shared edges as links.

    Attributes:
        adjacency: (m, m) symmetric boolean CSR matrix, zero diagonal.
        node_features: (m, 12) three corner positions followed by the unit normal.
        centroid_features: (m, 3) face centroids.
    """

    adjacency: sparse.csr_matrix
    node_features: np.ndarray
    centroid_features: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.node_features.shape[0]

    def permuted(self, order: np.ndarray) -> "FaceGraph":
        """Relabel nodes so that new node i is old node order[i]."""
        order = np.asarray(order)
        adj = self.adjacency[order][:, order]
        return FaceGraph(
            sparse.csr_matrix(adj),
            self.node_features[order],
            self.centroid_features[order],
        )


def build_face_graph(mesh: TriMesh) -> FaceGraph:
    """Dual graph with per-face features of a closed manifold mesh."""
    features = np.concatenate(
        [mesh.triangles.reshape(-1, 9), mesh.face_normals], axis=1
    )
    return FaceGraph(
        adjacency=mesh.face_adjacency.tocsr(),
        node_features=features,
        centroid_features=mesh.face_centroids.copy(),
    )
