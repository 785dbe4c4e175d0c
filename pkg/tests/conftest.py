"""
测试共享夹具

小而确定的几何体: 三角化的单位立方体、细分后带面标签的立方体、四面体
以及规则的六面体网格。
"""

from typing import List, Tuple

import numpy as np
import pytest
import trimesh

from polyhex.dataset import assemble_surface, triangulate
from polyhex.dataset.surface import triangle_labels
from polyhex.mesh import HexMesh, TriMesh, detect_sharp_edges, normalize_to_unit_box
from polyhex.mesh.refine import refine_faces
from polyhex.polycube import template

UNIT_HEX = np.array(
    [
        (0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0),
        (0, 0, 1), (1, 0, 1), (1, 1, 1), (0, 1, 1),
    ],
    dtype=np.float64,
)  # fmt: skip


def labelled_polycube(type_id: int, refinements: int = 2) -> Tuple[TriMesh, np.ndarray]:
    """Planar polycube surface in the unit-box frame with a face id per triangle."""
    quads = assemble_surface(template(type_id))
    mesh = triangulate(quads)
    labels = triangle_labels(quads)
    for _ in range(refinements):
        step = refine_faces(mesh, np.ones(mesh.n_faces, dtype=bool))
        mesh, labels = step.mesh, labels[step.parent]
    mesh = normalize_to_unit_box(mesh)
    return mesh.with_sharp_edges(detect_sharp_edges(mesh)), labels


def labelled_cube(refinements: int = 2) -> Tuple[TriMesh, np.ndarray]:
    return labelled_polycube(1, refinements)


def hex_grid(n: int, lo: float = -0.5, hi: float = 0.5) -> HexMesh:
    """n x n x n block of axis-aligned hexes spanning [lo, hi]^3."""
    t = np.linspace(lo, hi, n + 1)
    X, Y, Z = np.meshgrid(t, t, t, indexing="ij")
    vertices = np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])
    I = np.arange((n + 1) ** 3).reshape(n + 1, n + 1, n + 1)
    elements = np.stack(
        [
            I[:-1, :-1, :-1], I[1:, :-1, :-1], I[1:, 1:, :-1], I[:-1, 1:, :-1],
            I[:-1, :-1, 1:], I[1:, :-1, 1:], I[1:, 1:, 1:], I[:-1, 1:, 1:],
        ],
        axis=-1,
    ).reshape(-1, 8)  # fmt: skip
    return HexMesh(vertices, elements)


def sphere_mesh(subdivisions: int = 3) -> TriMesh:
    """Icosphere in the unit-box frame."""
    ico = trimesh.creation.icosphere(subdivisions=subdivisions)
    return normalize_to_unit_box(TriMesh(ico.vertices, ico.faces))


def _disk_point(a: float, b: float) -> Tuple[float, float]:
    """Concentric square-to-disk map."""
    if a == 0.0 and b == 0.0:
        return 0.0, 0.0
    if abs(a) > abs(b):
        r, phi = a, 0.25 * np.pi * b / a
    else:
        r, phi = b, 0.5 * np.pi - 0.25 * np.pi * a / b
    return r * np.cos(phi), r * np.sin(phi)


def capped_sphere(n: int = 8) -> Tuple[TriMesh, np.ndarray, List[int]]:
    """Unit sphere from two n x n grid caps glued along the equator.

    Returns the mesh, the upper hemisphere's triangles and the four grid
    corners on the equator, counter-clockwise seen from +z.
    """
    t = np.linspace(-1.0, 1.0, n + 1)
    upper = []
    for a in t:
        for b in t:
            px, py = _disk_point(float(a), float(b))
            s = float(np.hypot(px, py))
            if s == 0.0:
                upper.append((0.0, 0.0, 1.0))
                continue
            theta = 0.5 * np.pi * s
            upper.append((np.sin(theta) * px / s, np.sin(theta) * py / s, np.cos(theta)))
    upper_ids = np.arange((n + 1) ** 2).reshape(n + 1, n + 1)
    lower_ids = upper_ids.copy()
    inner = upper_ids[1:-1, 1:-1]
    lower_ids[1:-1, 1:-1] = len(upper) + np.arange(inner.size).reshape(inner.shape)
    vertices = np.array(upper)
    vertices[upper_ids[[0, -1], :].ravel(), 2] = 0.0
    vertices[upper_ids[:, [0, -1]].ravel(), 2] = 0.0
    lower = vertices[inner.ravel()] * np.array([1.0, 1.0, -1.0])
    vertices = np.vstack([vertices, lower])

    top: List[Tuple[int, int, int]] = []
    bottom: List[Tuple[int, int, int]] = []
    for i in range(n):
        for j in range(n):
            cx, cy = t[i] + t[i + 1], t[j] + t[j + 1]
            for ids, out in ((upper_ids, top), (lower_ids, bottom)):
                v00, v10 = ids[i, j], ids[i + 1, j]
                v01, v11 = ids[i, j + 1], ids[i + 1, j + 1]
                # diagonals radiate from the pole to the four grid corners
                if cx * cy >= 0.0:
                    out += [(v00, v10, v11), (v00, v11, v01)]
                else:
                    out += [(v00, v10, v01), (v10, v11, v01)]
    faces = np.vstack([np.array(top), np.array(bottom)[:, ::-1]])
    corners = [int(upper_ids[0, 0]), int(upper_ids[n, 0]), int(upper_ids[n, n]), int(upper_ids[0, n])]
    return TriMesh(vertices, faces), np.arange(len(top)), corners


@pytest.fixture
def cube_mesh() -> TriMesh:
    """12 triangles on the corners of [0, 1]^3."""
    return triangulate(assemble_surface(template(1)))


@pytest.fixture
def cube_with_labels() -> Tuple[TriMesh, np.ndarray]:
    return labelled_cube()


@pytest.fixture
def tetrahedron() -> TriMesh:
    vertices = np.array([(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)], dtype=np.float64)
    faces = np.array([(0, 2, 1), (0, 1, 3), (0, 3, 2), (1, 2, 3)])
    return TriMesh(vertices, faces)


@pytest.fixture
def sphere() -> TriMesh:
    return sphere_mesh()


@pytest.fixture
def hemisphere() -> Tuple[TriMesh, np.ndarray, List[int]]:
    return capped_sphere()


@pytest.fixture
def unit_hex() -> np.ndarray:
    return UNIT_HEX.copy()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def make_labelled_polycube():
    return labelled_polycube


@pytest.fixture
def make_hex_grid():
    return hex_grid
