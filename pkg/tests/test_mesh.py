"""
网格模块测试
"""

import numpy as np
import pytest

from polyhex.core.errors import MeshError
from polyhex.mesh import (
    HexMesh,
    TriMesh,
    build_face_graph,
    detect_sharp_edges,
    load_hex_mesh,
    load_tri_mesh,
    normalize_to_unit_box,
    refine_faces,
    refine_uniform,
    save_hex_mesh,
    save_tri_mesh,
)
from polyhex.mesh.surface import boundary_loops, normalization_transform, patch_euler


def _ridged_box(tilt: float) -> TriMesh:
    """Unit box whose top is two roof planes, each tilted `tilt` degrees, ridge 8-9."""
    h = 1.0 + 0.5 * np.tan(np.radians(tilt))
    vertices = np.array(
        [
            (0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0),
            (0, 0, 1), (1, 0, 1), (1, 1, 1), (0, 1, 1),
            (0.5, 0, h), (0.5, 1, h),
        ],
        dtype=np.float64,
    )  # fmt: skip
    faces = np.array(
        [
            (0, 2, 1), (0, 3, 2),
            (0, 1, 5), (0, 5, 8), (0, 8, 4),
            (3, 6, 2), (3, 9, 6), (3, 7, 9),
            (0, 4, 7), (0, 7, 3),
            (1, 2, 6), (1, 6, 5),
            (4, 8, 9), (4, 9, 7),
            (8, 5, 6), (8, 6, 9),
        ]
    )  # fmt: skip
    return TriMesh(vertices, faces)


class TestTriMeshValidation:
    def test_cube_is_valid(self, cube_mesh):
        assert cube_mesh.n_vertices == 8
        assert cube_mesh.n_faces == 12
        assert len(cube_mesh.edges) == 18
        assert cube_mesh.euler_characteristic == 2
        assert cube_mesh.genus == 0

    def test_empty(self):
        with pytest.raises(MeshError) as err:
            TriMesh(np.zeros((0, 3)), np.zeros((0, 3)))
        assert err.value.code == "EMPTY_MESH"

    def test_index_out_of_range(self, tetrahedron):
        faces = tetrahedron.faces.copy()
        faces[1, 2] = 9
        with pytest.raises(MeshError) as err:
            TriMesh(tetrahedron.vertices, faces)
        assert err.value.code == "INDEX_OUT_OF_RANGE"
        assert err.value.details["index"] == 9

    def test_repeated_vertex(self, tetrahedron):
        faces = tetrahedron.faces.copy()
        faces[0] = (0, 0, 1)
        with pytest.raises(MeshError) as err:
            TriMesh(tetrahedron.vertices, faces)
        assert err.value.code == "REPEATED_VERTEX"

    def test_open_surface_rejected(self, tetrahedron):
        with pytest.raises(MeshError) as err:
            TriMesh(tetrahedron.vertices, tetrahedron.faces[:3])
        assert err.value.code == "NON_MANIFOLD_EDGE"

    def test_flipped_face_rejected(self, tetrahedron):
        faces = tetrahedron.faces.copy()
        faces[3] = faces[3, ::-1]
        with pytest.raises(MeshError) as err:
            TriMesh(tetrahedron.vertices, faces)
        assert err.value.code == "NON_MANIFOLD_EDGE"

    def test_degenerate_face(self, tetrahedron):
        vertices = tetrahedron.vertices.copy()
        vertices[3] = (0.5, 0.5, 0.0)
        with pytest.raises(MeshError) as err:
            TriMesh(vertices, tetrahedron.faces)
        assert err.value.code == "DEGENERATE_FACE"

    def test_vertices_are_read_only(self, cube_mesh):
        with pytest.raises(ValueError):
            cube_mesh.vertices[0, 0] = 5.0


class TestGeometry:
    def test_normals_point_outward(self, cube_mesh):
        outward = cube_mesh.face_centroids - 0.5
        assert (np.einsum("ij,ij->i", cube_mesh.face_normals, outward) > 0).all()
        assert np.allclose(np.linalg.norm(cube_mesh.face_normals, axis=1), 1.0)

    def test_area(self, cube_mesh):
        assert cube_mesh.face_areas.sum() == pytest.approx(6.0)

    def test_normalize_to_unit_box(self, tetrahedron):
        scaled = tetrahedron.with_vertices(tetrahedron.vertices * 4.0 + 7.0)
        out = normalize_to_unit_box(scaled)
        lo, hi = out.bbox
        assert (hi - lo).max() == pytest.approx(1.0)
        assert np.allclose(0.5 * (lo + hi), 0.0)

    def test_normalize_zero_extent(self):
        with pytest.raises(MeshError) as err:
            normalization_transform(np.ones(3), np.ones(3))
        assert err.value.code == "ZERO_EXTENT"

    def test_sharp_edges_of_cube(self, cube_mesh):
        sharp = detect_sharp_edges(cube_mesh, 30.0)
        assert len(sharp) == 12
        for a, b in sharp:
            # lattice edges differ in exactly one coordinate
            diff = np.abs(cube_mesh.vertices[a] - cube_mesh.vertices[b])
            assert np.count_nonzero(diff) == 1

    def test_sharp_threshold_above_right_angle(self, cube_mesh):
        assert detect_sharp_edges(cube_mesh, 95.0) == frozenset()

    def test_smooth_sphere_has_no_sharp_edges(self, sphere):
        assert detect_sharp_edges(sphere, 30.0) == frozenset()

    def test_shallow_ridge_is_not_sharp(self):
        """170° dihedral on the ridge, roof-to-wall creases stay sharp"""
        box = _ridged_box(5.0)
        sharp = detect_sharp_edges(box, 30.0)
        assert (8, 9) not in sharp
        # 4 bottom, 4 vertical, 2 eaves, 4 gable edges
        assert len(sharp) == 14
        assert {(4, 7), (5, 6), (4, 8), (5, 8), (7, 9), (6, 9)} <= sharp


class TestPatchTopology:
    def test_single_face_loop(self, cube_mesh):
        loops = boundary_loops(cube_mesh.faces[:2])
        assert len(loops) == 1 and len(loops[0]) == 4
        assert patch_euler(cube_mesh.faces[:2]) == 1

    def test_closed_surface_has_no_loops(self, cube_mesh):
        assert boundary_loops(cube_mesh.faces) == []
        assert patch_euler(cube_mesh.faces) == 2


class TestFaceGraph:
    def test_adjacency_and_features(self, cube_mesh):
        graph = build_face_graph(cube_mesh)
        A = graph.adjacency.toarray()
        assert A.shape == (12, 12)
        assert (A == A.T).all()
        assert not A.diagonal().any()
        assert (A.sum(axis=1) == 3).all()
        assert graph.node_features.shape == (12, 12)
        assert np.allclose(graph.node_features[:, :9], cube_mesh.triangles.reshape(-1, 9))
        assert np.allclose(np.linalg.norm(graph.node_features[:, 9:], axis=1), 1.0)

    def test_permuted(self, cube_mesh, rng):
        graph = build_face_graph(cube_mesh)
        order = rng.permutation(graph.n_nodes)
        moved = graph.permuted(order)
        assert np.allclose(moved.node_features, graph.node_features[order])
        A = graph.adjacency.toarray()
        assert (moved.adjacency.toarray() == A[order][:, order]).all()


class TestRefinement:
    def test_uniform(self, cube_mesh):
        fine = refine_uniform(cube_mesh)
        assert fine.n_faces == 48
        assert fine.n_vertices == 8 + 18
        assert np.allclose(fine.vertices[:8], cube_mesh.vertices)
        assert fine.face_areas.sum() == pytest.approx(6.0)

    def test_single_face_stays_conforming(self, cube_mesh):
        marked = np.zeros(cube_mesh.n_faces, dtype=bool)
        marked[0] = True
        step = refine_faces(cube_mesh, marked)
        assert step.mesh.n_vertices == 11
        assert step.mesh.n_faces == 18
        assert len(step.parent) == step.mesh.n_faces
        assert (step.parent == 0).sum() == 4
        assert len(step.midpoints) == 3


class TestFiles:
    def test_obj_round_trip(self, tmp_path, cube_mesh):
        path = tmp_path / "cube.obj"
        save_tri_mesh(cube_mesh, path)
        back = load_tri_mesh(path)
        assert np.array_equal(back.vertices, cube_mesh.vertices)
        assert np.array_equal(back.faces, cube_mesh.faces)

    def test_obj_rejects_quads(self, tmp_path):
        path = tmp_path / "quad.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")
        with pytest.raises(MeshError) as err:
            load_tri_mesh(path)
        assert err.value.code == "NON_TRIANGLE_FACE"

    def test_obj_parse_failure(self, tmp_path):
        path = tmp_path / "bad.obj"
        path.write_text("v 0 zero 0\n")
        with pytest.raises(MeshError) as err:
            load_tri_mesh(path)
        assert err.value.code == "PARSE_FAILURE"
        assert err.value.details["line"] == 1

    def test_obj_empty(self, tmp_path):
        path = tmp_path / "empty.obj"
        path.write_text("# nothing\n")
        with pytest.raises(MeshError) as err:
            load_tri_mesh(path)
        assert err.value.code == "EMPTY_MESH"

    def test_vtk_round_trip(self, tmp_path, make_hex_grid):
        grid = make_hex_grid(2)
        tagged = grid.with_tags(np.arange(grid.n_vertices) % 4)
        path = tmp_path / "grid.vtk"
        save_hex_mesh(tagged, path, scaled_jacobian=np.ones(grid.n_elements))
        back = load_hex_mesh(path)
        assert np.array_equal(back.vertices, tagged.vertices)
        assert np.array_equal(back.elements, tagged.elements)
        assert np.array_equal(back.boundary_tags, tagged.boundary_tags)
        assert "SCALARS scaled_jacobian double 1" in path.read_text()


class TestHexMesh:
    def test_boundary_of_grid(self, make_hex_grid):
        grid = make_hex_grid(2)
        grid.validate()
        assert len(grid.boundary_quads) == 24
        assert len(grid.boundary_vertices) == 26
        assert grid.boundary_faces_per_element().tolist() == [3] * 8

    def test_repeated_vertex_rejected(self, unit_hex):
        mesh = HexMesh(unit_hex, [[0, 1, 2, 3, 4, 5, 6, 6]])
        with pytest.raises(MeshError) as err:
            mesh.validate()
        assert err.value.code == "BAD_HEX"

    def test_non_conforming(self, unit_hex):
        mesh = HexMesh(unit_hex, [list(range(8))] * 3)
        with pytest.raises(MeshError) as err:
            mesh.validate()
        assert err.value.code == "NON_CONFORMING"
