"""Uniform octree sampling of unit lattice cubes and transfinite blending."""

from dataclasses import dataclass
from functools import cached_property
from itertools import combinations
from typing import Tuple

import numpy as np

from ..polycube.structure import LatticePoint

FineKey = Tuple[int, int, int]


@dataclass(frozen=True)
class OctreeGrid:
    """`level` subdivisions per unit cube; samples sit at i / 2**level."""

    level: int

    def __post_init__(self) -> None:
        if self.level < 1:
            raise ValueError(f"octree level must be >= 1, got {self.level}")

    @property
    def resolution(self) -> int:
        return 2**self.level

    @property
    def elements_per_cube(self) -> int:
        return 8**self.level

    @property
    def points_per_cube(self) -> int:
        return (self.resolution + 1) ** 3

    @cached_property
    def samples(self) -> np.ndarray:
        return np.arange(self.resolution + 1) / self.resolution

    def fine(self, p: LatticePoint) -> FineKey:
        n = self.resolution
        return (p[0] * n, p[1] * n, p[2] * n)

    def cube_keys(self, origin: LatticePoint) -> np.ndarray:
        """(n+1, n+1, n+1, 3) integer keys of the samples of one cube."""
        r = np.arange(self.resolution + 1)
        grid = np.stack(np.meshgrid(r, r, r, indexing="ij"), axis=-1)
        return grid + np.array(self.fine(origin))


def _project(grid: np.ndarray, axis: int) -> np.ndarray:
    n = grid.shape[axis] - 1
    shape = [1] * grid.ndim
    shape[axis] = n + 1
    t = (np.arange(n + 1) / n).reshape(shape)
    lo = np.take(grid, [0], axis=axis)
    hi = np.take(grid, [n], axis=axis)
    return (1.0 - t) * lo + t * hi


def transfinite(grid: np.ndarray) -> np.ndarray:
    """Boolean-sum interpolation of a (..., 3) block from its boundary.

    One grid axis gives linear interpolation, two a Coons patch, three the
    trilinear transfinite volume map. Only boundary entries are read.
    """
    axes = range(grid.ndim - 1)
    out = np.zeros(grid.shape)
    for size in range(1, len(axes) + 1):
        sign = 1.0 if size % 2 else -1.0
        for subset in combinations(axes, size):
            g = grid
            for a in subset:
                g = _project(g, a)
            out = out + sign * np.broadcast_to(g, grid.shape)
    return out
