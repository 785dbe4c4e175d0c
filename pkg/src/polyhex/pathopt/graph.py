"""
Weighted shortest paths on the mesh edge graph.

The weight of an edge depends on the edge the path arrived by (turning
angle), so the search runs over directed-edge states. The first edge of a
path has no turning term.
"""

import heapq
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Iterable, List, Optional, Sequence, Set

import numpy as np

from ..core.errors import PathError
from ..core.logging import get_logger
from ..core.types import PathWeights
from ..mesh.surface import Edge, TriMesh, edge_key

logger = get_logger(__name__)


def _angle(u: np.ndarray, w: np.ndarray) -> float:
    nu, nw = float(np.linalg.norm(u)), float(np.linalg.norm(w))
    if nu == 0.0 or nw == 0.0:
        return 0.0
    return math.acos(max(-1.0, min(1.0, float(np.dot(u, w)) / (nu * nw))))


def edge_weight(
    edge: np.ndarray,
    prev_dir: Optional[np.ndarray],
    goal_dir: np.ndarray,
    lambda0: float,
    lambda1: float,
    lambda2: float,
) -> float:
    """Length / lambda0 plus the turning and goal-deviation angles (radians).

    `edge` is the vector from the start to the end vertex; a missing
    `prev_dir` or a zero `goal_dir` contributes no angle.
    """
    edge = np.asarray(edge, dtype=np.float64)
    theta = 0.0 if prev_dir is None else _angle(edge, np.asarray(prev_dir, dtype=np.float64))
    phi = _angle(edge, np.asarray(goal_dir, dtype=np.float64))
    return float(np.linalg.norm(edge)) / lambda0 + lambda1 * theta + lambda2 * phi


@dataclass(eq=False)
class EdgeGraph:
    """Vertex positions, undirected edges with sharp flags, and the claimed edges.

    Directed edge `2*e` runs lo->hi along edge `e`, `2*e + 1` runs hi->lo.
    """

    vertices: np.ndarray
    edges: np.ndarray
    sharp: np.ndarray
    used_edges: Set[Edge] = field(default_factory=set)

    def __post_init__(self) -> None:
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        e = np.sort(np.asarray(self.edges, dtype=np.int64).reshape(-1, 2), axis=1)
        self.edges = e
        self.sharp = np.asarray(self.sharp, dtype=bool).reshape(-1)
        if len(self.sharp) != len(e):
            raise ValueError("one sharp flag per edge required")
        if len(e) and (e.min() < 0 or e.max() >= len(self.vertices) or (e[:, 0] == e[:, 1]).any()):
            raise ValueError("edge endpoints out of range or degenerate")

    @classmethod
    def from_mesh(cls, mesh: TriMesh) -> "EdgeGraph":
        sharp = np.array(
            [(int(a), int(b)) in mesh.sharp_edges for a, b in mesh.edges], dtype=bool
        )
        return cls(mesh.vertices, mesh.edges, sharp)

    @classmethod
    def from_edges(
        cls,
        vertices: np.ndarray,
        edges: Sequence[Sequence[int]],
        sharp: Optional[Sequence[bool]] = None,
    ) -> "EdgeGraph":
        n = len(edges)
        return cls(vertices, np.array(edges).reshape(-1, 2), np.zeros(n, bool) if sharp is None else sharp)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @cached_property
    def index(self) -> Dict[Edge, int]:
        return {(int(a), int(b)): i for i, (a, b) in enumerate(self.edges)}

    @cached_property
    def tails(self) -> np.ndarray:
        return np.stack([self.edges[:, 0], self.edges[:, 1]], axis=1).reshape(-1)

    @cached_property
    def heads(self) -> np.ndarray:
        return np.stack([self.edges[:, 1], self.edges[:, 0]], axis=1).reshape(-1)

    @cached_property
    def vectors(self) -> np.ndarray:
        """(2E, 3) head - tail per directed edge."""
        return self.vertices[self.heads] - self.vertices[self.tails]

    @cached_property
    def outgoing(self) -> List[List[int]]:
        out: List[List[int]] = [[] for _ in range(self.n_vertices)]
        for d, t in enumerate(self.tails.tolist()):
            out[t].append(d)
        return out

    def mark_used(self, path: Sequence[int]) -> None:
        self.used_edges.update(edge_key(int(a), int(b)) for a, b in zip(path, path[1:]))

    def used_mask(self) -> np.ndarray:
        """(E,) bool, edges already claimed by a path."""
        mask = np.zeros(len(self.edges), dtype=bool)
        for key in self.used_edges:
            i = self.index.get(key)
            if i is not None:
                mask[i] = True
        return mask


def path_cost(graph: EdgeGraph, path: Sequence[int], weights: PathWeights) -> float:
    """Sum of edge weights along a vertex sequence, goal = its last vertex."""
    goal = graph.vertices[path[-1]]
    total, prev = 0.0, None
    for a, b in zip(path, path[1:]):
        vec = graph.vertices[b] - graph.vertices[a]
        sharp = bool(graph.sharp[graph.index[edge_key(int(a), int(b))]])
        lam0 = weights.lambda0_sharp if sharp else weights.lambda0_smooth
        total += edge_weight(vec, prev, goal - graph.vertices[a], lam0, weights.lambda1, weights.lambda2)
        prev = vec
    return total


def _drop_loops(walk: List[int]) -> List[int]:
    """Cut every closed sub-walk; a cut never raises the cost."""
    out: List[int] = []
    position: Dict[int, int] = {}
    for v in walk:
        if v in position:
            for u in out[position[v] + 1 :]:
                del position[u]
            del out[position[v] + 1 :]
        else:
            position[v] = len(out)
            out.append(v)
    return out


def shortest_path(
    graph: EdgeGraph,
    src: int,
    dst: int,
    weights: PathWeights,
    allowed: Optional[np.ndarray] = None,
    blocked: Iterable[int] = (),
    mark_used: bool = True,
) -> List[int]:
    """Minimum-weight simple path from `src` to `dst` avoiding used edges.

    `allowed` (n,) restricts intermediate vertices; `blocked` vertices are
    never entered. `src` and `dst` are always admissible. The chosen edges are
    added to `graph.used_edges` unless `mark_used` is False.
    """
    if src == dst:
        raise PathError.from_key("NO_PATH", "errors.path.no_path", src=src, dst=dst)

    ok_vertex = np.ones(graph.n_vertices, dtype=bool) if allowed is None else np.asarray(allowed, bool).copy()
    for v in blocked:
        ok_vertex[int(v)] = False
    ok_vertex[[src, dst]] = True

    heads, tails, vec = graph.heads, graph.tails, graph.vectors
    usable = ~np.repeat(graph.used_mask(), 2) & ok_vertex[heads] & ok_vertex[tails]

    length = np.linalg.norm(vec, axis=1)
    lam0 = np.where(np.repeat(graph.sharp, 2), weights.lambda0_sharp, weights.lambda0_smooth)
    to_goal = graph.vertices[dst] - graph.vertices[tails]
    goal_len = np.linalg.norm(to_goal, axis=1)
    denom = length * goal_len
    cos_phi = np.einsum("ij,ij->i", vec, to_goal) / np.where(denom > 0.0, denom, 1.0)
    phi = np.where(denom > 0.0, np.arccos(np.clip(cos_phi, -1.0, 1.0)), 0.0)
    base = (length / lam0 + weights.lambda2 * phi).tolist()
    unit = (vec / np.where(length > 0.0, length, 1.0)[:, None]).tolist()
    usable_l = usable.tolist()
    heads_l = heads.tolist()
    lam1 = weights.lambda1

    dist = [math.inf] * len(heads_l)
    pred = [-1] * len(heads_l)
    heap: List[tuple] = []
    for d in graph.outgoing[src]:
        if usable_l[d] and base[d] < dist[d]:
            dist[d] = base[d]
            heapq.heappush(heap, (base[d], d))

    found = -1
    while heap:
        cost, d = heapq.heappop(heap)
        if cost > dist[d]:
            continue
        v = heads_l[d]
        if v == dst:
            found = d
            break
        ux, uy, uz = unit[d]
        for d2 in graph.outgoing[v]:
            if not usable_l[d2]:
                continue
            wx, wy, wz = unit[d2]
            theta = math.acos(max(-1.0, min(1.0, ux * wx + uy * wy + uz * wz)))
            nc = cost + base[d2] + lam1 * theta
            if nc < dist[d2]:
                dist[d2] = nc
                pred[d2] = d
                heapq.heappush(heap, (nc, d2))

    if found < 0:
        raise PathError.from_key("NO_PATH", "errors.path.no_path", src=src, dst=dst)

    chain = []
    d = found
    while d >= 0:
        chain.append(d)
        d = pred[d]
    chain.reverse()
    walk = [src] + [heads_l[d] for d in chain]
    path = _drop_loops(walk)
    if mark_used:
        graph.mark_used(path)
    logger.debug(f"路径 {src} -> {dst}: {len(path) - 1} 条边, 代价 {dist[found]:.6g}")
    return path
