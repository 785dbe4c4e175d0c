"""
Lloyd's K-means with deterministic tie-breaking and empty-cluster reseeding.
"""

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from ..core.errors import SegmentationError
from ..core.logging import get_logger

logger = get_logger(__name__)


@dataclass
class ClusterState:
    """Result of a K-means run.

    `assignment` comes from the last assignment step and `centroids` from the
    update that followed it; `loss` pairs the two. `history` holds the loss
    after every iteration.
    """

    centroids: np.ndarray
    assignment: np.ndarray
    loss: float
    iterations: int = 0
    history: List[float] = field(default_factory=list)
    reseeded: int = 0

    @property
    def k(self) -> int:
        return len(self.centroids)


def assign_nearest(points: np.ndarray, centroids: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Nearest centroid per point (lowest index on ties) and the squared distance."""
    d2 = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    labels = d2.argmin(axis=1)
    return labels, d2[np.arange(len(points)), labels]


def kmeans(
    points: np.ndarray,
    seeds: np.ndarray,
    tol: float = 0.03,
    max_iters: int = 500,
) -> ClusterState:
    """Assign, update, repeat; stop when the relative loss change is at most `tol`.

    An empty cluster is moved onto the point farthest from its assigned
    centroid.
    """
    X = np.asarray(points, dtype=np.float64)
    C = np.array(seeds, dtype=np.float64)
    if X.ndim != 2 or C.ndim != 2 or len(X) == 0 or len(C) == 0:
        raise SegmentationError.from_key("EMPTY_INPUT", "errors.segmentation.empty_input")

    state = ClusterState(C, np.zeros(len(X), dtype=np.int64), float("inf"))
    prev = None
    for it in range(1, max_iters + 1):
        labels, d2 = assign_nearest(X, C)
        counts = np.bincount(labels, minlength=len(C))
        sums = np.zeros_like(C)
        np.add.at(sums, labels, X)
        nonempty = counts > 0
        C = C.copy()
        C[nonempty] = sums[nonempty] / counts[nonempty, None]

        far = d2.copy()
        for j in np.flatnonzero(~nonempty):
            idx = int(far.argmax())
            C[j] = X[idx]
            far[idx] = -1.0
            state.reseeded += 1
            logger.debug(f"K均值第 {it} 次迭代: 空簇 {j} 重新播种到点 {idx}")

        diff = X - C[labels]
        loss = float(np.einsum("ij,ij->", diff, diff))
        state.centroids, state.assignment, state.loss, state.iterations = C, labels, loss, it
        state.history.append(loss)

        if loss == 0.0 or (prev is not None and prev - loss <= tol * prev):
            break
        prev = loss

    logger.debug(
        f"K均值结束: k={len(C)}, n={len(X)}, {state.iterations} 次迭代, loss={state.loss:.6e}"
    )
    return state
