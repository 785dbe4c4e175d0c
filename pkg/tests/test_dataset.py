"""
训练数据生成测试
"""

import numpy as np
import pytest

from polyhex.core.errors import DatasetError
from polyhex.core.types import DatasetConfig
from polyhex.dataset import (
    DeformationCage,
    assemble_surface,
    catmull_clark,
    generate_dataset,
    load_dataset,
    make_sample,
    random_deform,
    triangulate,
    write_dataset,
)
from polyhex.dataset.surface import triangle_labels
from polyhex.polycube import template

SMALL = DatasetConfig(subdivision_levels=1, sigma=0.05)


class TestSurface:
    def test_cube_quads(self):
        quads = assemble_surface(template(1))
        assert quads.n_vertices == 8
        assert quads.n_faces == 6
        assert (quads.edge_counts() == 2).all()
        assert sorted(quads.face_labels.tolist()) == list(range(6))

    def test_lattice_facets_become_quads(self):
        pc = template(4)
        quads = assemble_surface(pc)
        assert quads.n_faces == pc.surface_area
        assert (quads.edge_counts() == 2).all()

    def test_catmull_clark_counts(self):
        quads = catmull_clark(assemble_surface(template(1)), 1)
        assert quads.n_faces == 24
        assert quads.n_vertices == 8 + 6 + 12
        assert np.array_equal(quads.face_labels, np.repeat(np.arange(6), 4))

    def test_catmull_clark_shrinks_toward_center(self):
        quads = catmull_clark(assemble_surface(template(1)), 2)
        assert quads.vertices.min() > 0.0 and quads.vertices.max() < 1.0

    def test_triangulate_keeps_labels(self):
        quads = catmull_clark(assemble_surface(template(3)), 1)
        mesh = triangulate(quads)
        labels = triangle_labels(quads)
        assert mesh.n_faces == 2 * quads.n_faces
        assert mesh.genus == 0
        assert np.array_equal(labels[0::2], quads.face_labels)
        assert np.array_equal(labels[1::2], quads.face_labels)

    def test_ring_keeps_its_hole(self):
        mesh = triangulate(catmull_clark(assemble_surface(template(2)), 1))
        assert mesh.genus == 1


class TestDeformation:
    def test_weights_partition_unity(self, rng):
        points = rng.random((50, 3))
        cage = DeformationCage.around(points, resolution=4, margin=0.1)
        assert cage.control_points.shape == (4, 4, 4, 3)
        assert np.allclose(cage.influence.sum(axis=1), 1.0)
        assert (cage.influence >= 0.0).all()

    def test_rigid_shift(self, rng):
        points = rng.random((20, 3))
        cage = DeformationCage.around(points, resolution=3)
        shift = np.array([0.1, -0.2, 0.3])
        moved = cage.apply(points, np.tile(shift, (27, 1)))
        assert np.allclose(moved - points, shift)

    def test_same_seed_same_mesh(self):
        base = triangulate(catmull_clark(assemble_surface(template(1)), 1))
        a = random_deform(base, rng_seed=7)
        b = random_deform(base, rng_seed=7)
        c = random_deform(base, rng_seed=8)
        assert np.array_equal(a.vertices, b.vertices)
        assert not np.array_equal(a.vertices, c.vertices)
        assert np.array_equal(a.faces, base.faces)

    def test_no_displacement(self, cube_mesh):
        out = random_deform(cube_mesh, sigma=0.0, rng_seed=3)
        assert np.allclose(out.vertices, cube_mesh.vertices)

    def test_exhausted_attempts(self, cube_with_labels):
        mesh, _ = cube_with_labels
        with pytest.raises(DatasetError) as err:
            random_deform(mesh, sigma=50.0, perturb_fraction=1.0, max_attempts=2)
        assert err.value.code == "DEFORMATION_FAILED"


class TestSamples:
    def test_make_sample(self):
        sample = make_sample(1, 5, SMALL)
        assert sample.label == 1
        assert sample.seed == 5
        assert sample.graph.n_nodes == sample.mesh.n_faces == 48
        assert sample.region_centroids.shape == (6, 3)
        lo, hi = sample.mesh.bbox
        assert (hi - lo).max() == pytest.approx(1.0)

    def test_generate_uses_consecutive_seeds(self):
        samples = generate_dataset([1, 3], per_type=2, base_seed=10, cfg=SMALL)
        assert [s.label for s in samples] == [1, 1, 3, 3]
        assert [s.seed for s in samples] == [10, 11, 12, 13]

    def test_generate_rejects_empty_request(self):
        with pytest.raises(DatasetError) as err:
            generate_dataset([1], per_type=0)
        assert err.value.code == "INVALID_REQUEST"
        assert err.value.details["per_type"] == 0

    def test_write_and_load(self, tmp_path):
        samples = generate_dataset([1, 4], per_type=1, base_seed=0, cfg=SMALL)
        manifest = write_dataset(samples, tmp_path / "data")
        assert manifest.exists()
        back = load_dataset(tmp_path / "data")
        assert [(s.label, s.seed) for s in back] == [(1, 0), (4, 1)]
        for old, new in zip(samples, back):
            assert np.allclose(old.mesh.vertices, new.mesh.vertices)
            assert np.array_equal(old.face_labels, new.face_labels)
            assert np.allclose(old.region_centroids, new.region_centroids)

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(DatasetError) as err:
            load_dataset(tmp_path)
        assert err.value.code == "MISSING_FILE"
