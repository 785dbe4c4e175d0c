"""
边界路径优化测试
"""

import math

import numpy as np
import pytest

from polyhex.core.errors import PathError
from polyhex.core.types import PathWeights
from polyhex.pathopt import (
    EdgeGraph,
    PathSet,
    edge_weight,
    extract_paths,
    identify_corners,
    load_paths,
    optimize_boundaries,
    path_cost,
    save_paths,
    shortest_path,
)
from polyhex.polycube import template
from polyhex.segmentation import Segmentation

WEIGHTS = PathWeights()


def _square() -> EdgeGraph:
    vertices = np.array([(0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0)], dtype=float)
    return EdgeGraph.from_edges(vertices, [(0, 1), (1, 2), (2, 3), (3, 0)])


def _random_graph(seed: int) -> EdgeGraph:
    r = np.random.default_rng(seed)
    n = 7
    edges = [(i, i + 1) for i in range(n - 1)]
    for a in range(n):
        for b in range(a + 2, n):
            if r.random() < 0.4:
                edges.append((a, b))
    sharp = r.random(len(edges)) < 0.3
    return EdgeGraph.from_edges(r.random((n, 3)), edges, sharp)


def _all_simple_paths(graph: EdgeGraph, src: int, dst: int):
    neighbours = {v: set() for v in range(graph.n_vertices)}
    for a, b in graph.edges.tolist():
        neighbours[a].add(b)
        neighbours[b].add(a)
    stack = [[src]]
    while stack:
        path = stack.pop()
        if path[-1] == dst:
            yield path
            continue
        for v in neighbours[path[-1]]:
            if v not in path:
                stack.append(path + [v])


class TestEdgeWeight:
    def test_length_term(self):
        assert edge_weight(np.array([1.0, 0, 0]), None, np.array([1.0, 0, 0]), 2.0, 1.0, 1.0) == (
            pytest.approx(0.5)
        )

    def test_turning_and_goal_terms(self):
        w = edge_weight(np.array([1.0, 0, 0]), np.array([0, 1.0, 0]), np.array([0, 0, 1.0]), 1.0, 1.0, 2.0)
        assert w == pytest.approx(1.0 + math.pi / 2 + math.pi)

    def test_zero_goal_has_no_angle(self):
        assert edge_weight(np.array([0, 3.0, 0]), None, np.zeros(3), 1.0, 1.0, 1.0) == pytest.approx(3.0)


class TestShortestPath:
    @pytest.mark.parametrize("seed", range(6))
    def test_matches_exhaustive_search(self, seed):
        graph = _random_graph(seed)
        best = min(path_cost(graph, p, WEIGHTS) for p in _all_simple_paths(graph, 0, 6))
        path = shortest_path(graph, 0, 6, WEIGHTS, mark_used=False)
        assert path[0] == 0 and path[-1] == 6
        assert len(set(path)) == len(path)
        assert path_cost(graph, path, WEIGHTS) == pytest.approx(best)
        assert graph.used_edges == set()

    def test_same_endpoints(self):
        with pytest.raises(PathError) as err:
            shortest_path(_square(), 2, 2, WEIGHTS)
        assert err.value.code == "NO_PATH"

    def test_used_edges_are_avoided(self):
        graph = _square()
        first = shortest_path(graph, 0, 2, WEIGHTS)
        second = shortest_path(graph, 0, 2, WEIGHTS)
        assert {first[1], second[1]} == {1, 3}
        with pytest.raises(PathError) as err:
            shortest_path(graph, 0, 2, WEIGHTS)
        assert err.value.code == "NO_PATH"

    def test_blocked_vertex(self):
        assert shortest_path(_square(), 0, 2, WEIGHTS, blocked=[1]) == [0, 3, 2]

    def test_allowed_mask(self):
        allowed = np.array([False, True, False, False])
        assert shortest_path(_square(), 0, 2, WEIGHTS, allowed=allowed) == [0, 1, 2]

    def test_sharp_edges_are_cheaper(self):
        vertices = np.array([(0, 0, 0), (1, 0.1, 0), (2, 0, 0), (1, -0.1, 0)], dtype=float)
        edges = [(0, 1), (1, 2), (0, 3), (3, 2)]
        graph = EdgeGraph.from_edges(vertices, edges, [False, False, True, True])
        assert shortest_path(graph, 0, 2, WEIGHTS) == [0, 3, 2]

    def test_bad_edges(self):
        with pytest.raises(ValueError):
            EdgeGraph.from_edges(np.zeros((2, 3)), [(0, 0)])


class TestBoundaries:
    def test_corners_of_cube(self, cube_with_labels):
        mesh, labels = cube_with_labels
        corners = identify_corners(mesh, Segmentation(labels, np.arange(6)), template(1))
        assert len(set(corners)) == 8
        assert np.allclose(np.abs(mesh.vertices[corners]), 0.5)

    def test_extract_paths(self, cube_with_labels):
        mesh, labels = cube_with_labels
        pc = template(1)
        paths = extract_paths(mesh, Segmentation(labels, np.arange(6)), pc)
        assert len(paths.paths) == 12
        for pe, p in zip(pc.edges, paths.paths):
            assert p[0] == paths.corner_map[pe.start]
            assert p[-1] == paths.corner_map[pe.end]
            # each cube edge is split into four mesh edges
            assert len(p) == 5

    def test_clean_segmentation_survives(self, cube_with_labels):
        mesh, labels = cube_with_labels
        result = optimize_boundaries(mesh, Segmentation(labels, np.arange(6)), template(1))
        assert result.mesh.n_faces == mesh.n_faces
        assert np.array_equal(result.segmentation.face_labels, labels)
        assert len(result.paths.paths) == 12

    def test_jagged_boundary_is_straightened(self, cube_with_labels):
        mesh, labels = cube_with_labels
        corners = set(np.flatnonzero((np.abs(mesh.vertices) == 0.5).all(axis=1)).tolist())
        noisy = labels.copy()
        for a, b in sorted(mesh.sharp_edges):
            t = mesh.directed_edge_face[(a, b)]
            if not corners & set(mesh.faces[t].tolist()):
                noisy[t] = labels[mesh.directed_edge_face[(b, a)]]
                break
        assert (noisy != labels).sum() == 1
        result = optimize_boundaries(mesh, Segmentation(noisy, np.arange(6)), template(1))
        assert np.array_equal(result.segmentation.face_labels, labels)

    def test_paths_file(self, tmp_path):
        paths = PathSet([[0, 4, 1], [1, 5, 2]], [0, 1, 2])
        target = tmp_path / "paths.txt"
        save_paths(paths, target)
        back = load_paths(target)
        assert back.paths == paths.paths
        assert back.corner_map == paths.corner_map

    def test_paths_file_without_corners(self, tmp_path):
        target = tmp_path / "paths.txt"
        target.write_text("path 1 2\n")
        with pytest.raises(PathError) as err:
            load_paths(target)
        assert err.value.code == "BAD_FILE"
