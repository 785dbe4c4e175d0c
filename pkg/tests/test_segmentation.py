"""
K均值与多立方体分割测试
"""

import numpy as np
import pytest

from polyhex.core.errors import SegmentationError
from polyhex.core.types import SegmentConfig
from polyhex.mesh import build_face_graph
from polyhex.mesh.surface import area_weighted_centroid, boundary_loops, patch_euler
from polyhex.polycube import label_vector, template
from polyhex.segmentation import (
    Segmentation,
    assign_nearest,
    kmeans,
    load_segmentation,
    merge_fragments,
    save_segmentation,
    seed_normals,
    segment,
)


def _lloyd(points, seeds, tol):
    """Plain-loop Lloyd iteration with the same tie-break, reseeding and stop rule."""
    C = [list(map(float, c)) for c in seeds]
    prev, history, labels = None, [], []
    for _ in range(500):
        labels, d2 = [], []
        for p in points:
            dists = [sum((a - b) ** 2 for a, b in zip(p, c)) for c in C]
            j = min(range(len(C)), key=lambda i: (dists[i], i))
            labels.append(j)
            d2.append(dists[j])
        new = []
        for j, c in enumerate(C):
            members = [p for p, lab in zip(points, labels) if lab == j]
            new.append([sum(col) / len(members) for col in zip(*members)] if members else list(c))
        for j in range(len(C)):
            if j not in labels:
                far = max(range(len(points)), key=lambda i: (d2[i], -i))
                new[j] = list(map(float, points[far]))
                d2[far] = -1.0
        C = new
        loss = sum(sum((a - b) ** 2 for a, b in zip(p, C[lab])) for p, lab in zip(points, labels))
        history.append(loss)
        if loss == 0.0 or (prev is not None and prev - loss <= tol * prev):
            break
        prev = loss
    return labels, np.array(C), history


class TestKMeans:
    def test_matches_plain_lloyd(self):
        for seed in range(50):
            r = np.random.default_rng(seed)
            n = int(r.integers(3, 31))
            k = int(r.integers(1, min(n, 6) + 1))
            points = r.random((n, 3))
            seeds = points[r.choice(n, size=k, replace=False)]
            labels, centroids, history = _lloyd(points.tolist(), seeds.tolist(), 0.01)
            state = kmeans(points, seeds, tol=0.01)
            assert state.assignment.tolist() == labels
            assert np.allclose(state.centroids, centroids)
            assert np.allclose(state.history, history)
            assert all(b <= a + 1e-12 for a, b in zip(history, history[1:]))

    def test_separated_blobs(self, rng):
        a = rng.normal(scale=0.05, size=(40, 2))
        b = rng.normal(scale=0.05, size=(30, 2)) + (5.0, 5.0)
        state = kmeans(np.vstack([a, b]), np.array([[1.0, 1.0], [4.0, 4.0]]), tol=0.0)
        assert state.assignment.tolist() == [0] * 40 + [1] * 30
        assert np.allclose(state.centroids[0], a.mean(axis=0))
        assert np.allclose(state.centroids[1], b.mean(axis=0))

    def test_loss_never_increases(self, rng):
        points = rng.random((200, 3))
        state = kmeans(points, points[:5], tol=0.0, max_iters=50)
        assert state.history == sorted(state.history, reverse=True)
        assert state.loss == state.history[-1]
        assert len(state.history) == state.iterations

    def test_stops_on_relative_change(self, rng):
        points = rng.random((200, 3))
        loose = kmeans(points, points[:5], tol=0.5)
        tight = kmeans(points, points[:5], tol=0.0)
        assert loose.iterations <= tight.iterations

    def test_ties_go_to_lowest_index(self):
        labels, d2 = assign_nearest(np.array([[1.0]]), np.array([[0.0], [2.0]]))
        assert labels.tolist() == [0]
        assert d2.tolist() == [1.0]

    def test_empty_cluster_is_reseeded(self):
        points = np.array([[0.0], [0.1], [10.0]])
        state = kmeans(points, np.array([[0.0], [100.0], [200.0]]), tol=0.0)
        assert state.reseeded >= 1
        assert np.isfinite(state.centroids).all()
        assert 10.0 in state.centroids.ravel()

    def test_empty_input(self):
        with pytest.raises(SegmentationError) as err:
            kmeans(np.zeros((0, 3)), np.eye(3))
        assert err.value.code == "EMPTY_INPUT"


class TestSegment:
    def test_seed_normals(self):
        seeds = seed_normals(template(1))
        assert seeds.shape == (6, 3)
        assert np.allclose(np.abs(seeds).sum(axis=1), 1.0)

    def test_cube_faces_recovered(self, cube_with_labels):
        mesh, labels = cube_with_labels
        seg = segment(mesh, template(1))
        assert seg.k == 6
        assert np.array_equal(seg.face_labels, labels)
        assert np.bincount(seg.labels).tolist() == [32] * 6

    def test_shared_label_split_by_centroids(self, make_labelled_polycube):
        mesh, labels = make_labelled_polycube(5)
        pc = template(5)
        centroids = np.array(
            [area_weighted_centroid(mesh, np.flatnonzero(labels == f)) for f in range(pc.n_faces)]
        )
        seg = segment(mesh, pc, cfg=SegmentConfig(tol=0.0), centroids=centroids)
        assert np.array_equal(seg.face_labels, labels)

    def test_sphere_splits_into_six_disks(self, sphere):
        """光滑曲面: 单立方体种子把球面分成六个圆盘面片"""
        pc = template(1)
        seg = segment(sphere, pc)
        seg.check(pc.n_faces)
        assert seg.k == 6
        assert len(seg.labels) == sphere.n_faces
        sizes = np.bincount(seg.labels, minlength=6)
        assert sizes.sum() == sphere.n_faces
        assert (sizes > 0.1 * sphere.n_faces).all()
        for p in range(seg.k):
            tris = seg.patch_triangles(p)
            assert patch_euler(sphere.faces[tris]) == 1
            assert len(boundary_loops(sphere.faces[tris])) == 1
            axis = label_vector(pc.boundary_faces[seg.patch_to_face[p]].label)
            mean = sphere.face_normals[tris].mean(axis=0)
            assert mean @ axis > 0.7 * np.linalg.norm(mean)

    def test_template_centroids_without_model(self, make_labelled_polycube):
        mesh, labels = make_labelled_polycube(5)
        seg = segment(mesh, template(5))
        seg.check(template(5).n_faces)
        assert (seg.face_labels == labels).mean() > 0.9


class TestSegmentationRecord:
    def test_check_rejects_wrong_count(self):
        with pytest.raises(SegmentationError) as err:
            Segmentation([0, 0, 1], [0, 1]).check(3)
        assert err.value.code == "SEGMENTATION_MISMATCH"

    def test_check_rejects_empty_patch(self):
        with pytest.raises(SegmentationError) as err:
            Segmentation([0, 0, 0], [0, 1]).check(2)
        assert err.value.code == "SEGMENTATION_MISMATCH"

    def test_face_to_patch_inverts(self):
        seg = Segmentation([0, 1, 2], [2, 0, 1])
        assert seg.face_labels.tolist() == [2, 0, 1]
        assert seg.face_to_patch[seg.patch_to_face].tolist() == [0, 1, 2]

    def test_file_round_trip(self, tmp_path):
        seg = Segmentation([0, 1, 1, 2], [2, 0, 1])
        path = tmp_path / "seg.txt"
        save_segmentation(seg, path)
        back = load_segmentation(path)
        assert np.array_equal(back.labels, seg.labels)
        assert np.array_equal(back.patch_to_face, seg.patch_to_face)

    def test_bad_file(self, tmp_path):
        path = tmp_path / "seg.txt"
        path.write_text("k 2\npatch_to_face 0 1\n0\n5\n")
        with pytest.raises(SegmentationError) as err:
            load_segmentation(path)
        assert err.value.code == "BAD_FILE"


class TestFragments:
    def _interior_triangle(self, mesh, labels):
        A = build_face_graph(mesh).adjacency.tocsr()
        for t in range(mesh.n_faces):
            if (labels[A[t].indices] == labels[t]).all():
                return t
        raise AssertionError("no interior triangle")

    def test_lone_triangle_merged_back(self, cube_with_labels):
        mesh, labels = cube_with_labels
        t = self._interior_triangle(mesh, labels)
        noisy = labels.copy()
        noisy[t] = (labels[t] + 1) % 6
        assert np.array_equal(merge_fragments(mesh, noisy), labels)

    def test_large_fragments_kept(self, cube_with_labels):
        mesh, labels = cube_with_labels
        t = self._interior_triangle(mesh, labels)
        noisy = labels.copy()
        noisy[t] = (labels[t] + 1) % 6
        assert np.array_equal(merge_fragments(mesh, noisy, min_fragment=1), noisy)
