"""
八叉树六面体网格生成测试
"""

import numpy as np
import pytest

from polyhex.core.errors import HexGenError
from polyhex.hexgen import (
    OctreeGrid,
    anchored_boundary,
    assemble_hex_mesh,
    disk_boundary,
    harmonic_uv,
    map_patch_boundary,
    sample_surface_point,
    sample_surface_points,
    snap_ticks,
    transfinite,
)
from polyhex.mesh.volume import VertexClass
from polyhex.polycube import template
from polyhex.quality import element_min_sj, max_boundary_faces, pillow
from polyhex.segmentation import Segmentation


def _flat_patch(mesh, labels, face_id):
    """Triangles of one cube face, boundary UV from the two in-plane coordinates."""
    tris = np.flatnonzero(labels == face_id)
    ids = np.unique(mesh.faces[tris])
    axis = int(np.flatnonzero(np.ptp(mesh.vertices[ids], axis=0) == 0.0)[0])
    plane = [a for a in range(3) if a != axis]
    a, b, c = mesh.vertices[mesh.faces[tris[0]]][:, plane]
    if (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]) < 0.0:
        plane.reverse()
    loop = disk_boundary(mesh, tris)
    return tris, plane, {v: mesh.vertices[v, plane] for v in loop}


class TestOctree:
    def test_counts(self):
        grid = OctreeGrid(2)
        assert grid.resolution == 4
        assert grid.elements_per_cube == 64
        assert grid.points_per_cube == 125
        assert np.allclose(grid.samples, [0, 0.25, 0.5, 0.75, 1.0])

    def test_cube_keys(self):
        keys = OctreeGrid(1).cube_keys((1, 0, 2))
        assert keys.shape == (3, 3, 3, 3)
        assert tuple(keys[0, 0, 0]) == (2, 0, 4)
        assert tuple(keys[-1, -1, -1]) == (4, 2, 6)

    def test_level_zero_rejected(self):
        with pytest.raises(ValueError):
            OctreeGrid(0)

    def test_transfinite_reproduces_linear_field(self, rng):
        n = 4
        t = np.arange(n + 1) / n
        P = np.stack(np.meshgrid(t, t, t, indexing="ij"), axis=-1)
        A, b = rng.normal(size=(3, 3)), rng.normal(size=3)
        field = P @ A.T + b
        block = field.copy()
        block[1:-1, 1:-1, 1:-1] = 0.0
        assert np.allclose(transfinite(block), field)

    def test_coons_patch(self, rng):
        t = np.linspace(0.0, 1.0, 5)
        U, V = np.meshgrid(t, t, indexing="ij")
        field = np.stack([U, V, U * V], axis=-1)
        block = field.copy()
        block[1:-1, 1:-1] = rng.normal(size=(3, 3, 3))
        assert np.allclose(transfinite(block), field)


class TestParameterization:
    def test_flat_patch_keeps_planar_coordinates(self, cube_with_labels):
        mesh, labels = cube_with_labels
        tris, plane, boundary = _flat_patch(mesh, labels, 0)
        param = harmonic_uv(mesh, tris, boundary)
        assert param.weighting == "cotangent"
        assert np.allclose(param.uv, mesh.vertices[param.vertices][:, plane])
        assert (np.abs(param.uv_areas) > 0.0).all()

    def test_sample_points(self, cube_with_labels):
        mesh, labels = cube_with_labels
        tris, plane, boundary = _flat_patch(mesh, labels, 2)
        param = harmonic_uv(mesh, tris, boundary)
        uv = np.array([[0.1, -0.2], [0.0, 0.0], [0.45, 0.3]])
        xs = sample_surface_points(param, uv)
        assert np.allclose(xs[:, plane], uv)

    def test_sample_single_point(self, cube_with_labels):
        mesh, labels = cube_with_labels
        tris, plane, boundary = _flat_patch(mesh, labels, 2)
        param = harmonic_uv(mesh, tris, boundary)
        assert np.allclose(sample_surface_point(param, (0.0, 0.0))[plane], 0.0)
        v = 5
        assert np.allclose(sample_surface_point(param, param.uv[v]), mesh.vertices[param.vertices[v]])

    def _face_corners(self, mesh, labels, face_id):
        tris, plane, _ = _flat_patch(mesh, labels, face_id)
        loop = disk_boundary(mesh, tris)
        corners = [v for v in loop if np.allclose(np.abs(mesh.vertices[v, plane]), 0.5)]
        return tris, loop, corners

    def test_map_patch_boundary(self, cube_with_labels):
        mesh, labels = cube_with_labels
        tris, loop, corners = self._face_corners(mesh, labels, 0)
        assert len(corners) == 4 and len(loop) == 16
        uv = map_patch_boundary(mesh, tris, corners)
        assert set(uv) == set(loop)
        assert np.allclose(uv[corners[0]], [0.0, 0.0])
        assert np.allclose(uv[corners[2]], [1.0, 1.0])
        ticks = {tuple(np.round(p * 4).astype(int)) for p in uv.values()}
        assert ticks == {(i, j) for i in range(5) for j in range(5) if i in (0, 4) or j in (0, 4)}

    def test_map_patch_boundary_needs_four_corners(self, cube_with_labels):
        mesh, labels = cube_with_labels
        tris, _, corners = self._face_corners(mesh, labels, 0)
        with pytest.raises(HexGenError) as err:
            map_patch_boundary(mesh, tris, corners[:3])
        assert err.value.code == "SEGMENTS"

    def test_hemisphere_interior_stays_inside_square(self, hemisphere):
        """弯曲面片: 调和映射后内部顶点严格位于单位正方形内"""
        mesh, tris, corners = hemisphere
        loop = disk_boundary(mesh, tris)
        assert len(loop) == 32
        param = harmonic_uv(mesh, tris, map_patch_boundary(mesh, tris, corners))
        interior = ~np.isin(param.vertices, loop)
        assert interior.sum() == 49
        uv = param.uv[interior]
        assert (uv > 0.0).all() and (uv < 1.0).all()
        # the pole sits at the centre by symmetry
        pole = int(np.argmax(mesh.vertices[param.vertices, 2]))
        assert np.allclose(param.uv[pole], [0.5, 0.5], atol=1e-9)

    def test_closed_surface_is_not_a_disk(self, cube_mesh):
        with pytest.raises(HexGenError) as err:
            disk_boundary(cube_mesh, np.arange(cube_mesh.n_faces))
        assert err.value.code == "NOT_DISK"

    def test_anchored_boundary(self):
        square = np.array([(0, 0), (1, 0), (2, 0), (2, 1), (2, 2), (1, 2), (0, 2), (0, 1)], dtype=float)
        positions = np.column_stack([square, np.zeros(8)])
        anchors = {0: np.zeros(2), 2: np.array([1.0, 0.0]), 4: np.ones(2), 6: np.array([0.0, 1.0])}
        uv = anchored_boundary(positions, range(8), anchors)
        assert np.allclose(uv[1], [0.5, 0.0])
        assert np.allclose(uv[7], [0.0, 0.5])
        assert len(uv) == 8

    def test_anchored_boundary_needs_three_anchors(self):
        with pytest.raises(HexGenError) as err:
            anchored_boundary(np.zeros((4, 3)), range(4), {0: np.zeros(2), 2: np.ones(2)})
        assert err.value.code == "SEGMENTS"


class TestTicks:
    def test_even_spacing(self):
        points = np.column_stack([np.arange(9.0), np.zeros(9), np.zeros(9)])
        assert snap_ticks(points, 4, "e") == [0, 2, 4, 6, 8]

    def test_strictly_increasing_on_skewed_path(self):
        x = np.array([0.0, 0.01, 0.02, 5.0, 10.0])
        points = np.column_stack([x, np.zeros(5), np.zeros(5)])
        ticks = snap_ticks(points, 4, "e")
        assert ticks[0] == 0 and ticks[-1] == 4
        assert all(a < b for a, b in zip(ticks, ticks[1:]))

    def test_path_too_coarse(self):
        with pytest.raises(HexGenError) as err:
            snap_ticks(np.zeros((3, 3)), 4, "e")
        assert err.value.code == "PATH_TOO_COARSE"


class TestAssemble:
    @pytest.mark.parametrize("level", [1, 2])
    def test_cube(self, cube_with_labels, level):
        mesh, labels = cube_with_labels
        hexes = assemble_hex_mesh(mesh, Segmentation(labels, np.arange(6)), template(1), level)
        n = 2**level
        assert hexes.n_elements == 8**level
        assert hexes.n_vertices == (n + 1) ** 3
        assert (element_min_sj(hexes.vertices, hexes.elements) > 0.99).all()
        assert (hexes.boundary_tags == VertexClass.CORNER).sum() == 8
        assert (hexes.boundary_tags == VertexClass.EDGE).sum() == 12 * (n - 1)
        lo, hi = hexes.vertices.min(axis=0), hexes.vertices.max(axis=0)
        assert np.allclose(lo, -0.5) and np.allclose(hi, 0.5)

    def test_cube_level_three(self, make_labelled_polycube):
        mesh, labels = make_labelled_polycube(1, refinements=3)
        hexes = assemble_hex_mesh(mesh, Segmentation(labels, np.arange(6)), template(1), 3)
        assert hexes.n_elements == 512
        assert hexes.n_vertices == 729
        assert (element_min_sj(hexes.vertices, hexes.elements) > 0.99).all()
        padded = pillow(hexes)
        assert padded.n_elements == 512 + 384
        assert max_boundary_faces(padded) <= 1
        counts = padded.boundary_faces_per_element()
        # the 384 outer quads each belong to their own pillow element
        assert (counts[:512] == 0).all()
        assert (counts[512:] == 1).all()
        assert (element_min_sj(padded.vertices, padded.elements) > 0.0).all()
