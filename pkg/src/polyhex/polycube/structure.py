"""
多立方体结构

The eleven polycube templates are read from the versioned table
`templates.txt`; boundary faces, internal faces, corners, crease edges and
rectangle decompositions are derived from the lattice cells.

Facet frame convention: a boundary facet with label L lies on axis a = L // 2
with outward sign s (+ for even labels). Its local u/v axes are chosen so that
u x v points outward, which makes the quad (0,0),(1,0),(1,1),(0,1)
counter-clockwise seen from outside.
"""

from collections import defaultdict
from dataclasses import dataclass
from functools import cached_property, lru_cache
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from ..core.errors import PolycubeError
from ..core.logging import get_logger

logger = get_logger(__name__)

LatticePoint = Tuple[int, int, int]
Cell = Tuple[int, int]
Rect = Tuple[int, int, int, int]  # u0, v0, u1, v1

LABEL_NAMES = ("+X", "-X", "+Y", "-Y", "+Z", "-Z")
NUM_TYPES = 11
TEMPLATE_TABLE = Path(__file__).with_name("templates.txt")


def label_axis(label: int) -> int:
    return label // 2


def label_sign(label: int) -> int:
    return 1 if label % 2 == 0 else -1


def label_vector(label: int) -> np.ndarray:
    n = np.zeros(3)
    n[label_axis(label)] = label_sign(label)
    return n


def face_frame(label: int) -> Tuple[int, int]:
    """(u axis, v axis) of a facet with this label, u x v outward."""
    a = label_axis(label)
    if label_sign(label) > 0:
        return (a + 1) % 3, (a + 2) % 3
    return (a + 2) % 3, (a + 1) % 3


def frame_point(label: int, plane: int, u: int, v: int) -> LatticePoint:
    ua, va = face_frame(label)
    p = [0, 0, 0]
    p[label_axis(label)] = plane
    p[ua] = u
    p[va] = v
    return (p[0], p[1], p[2])


def lattice_edge(p: LatticePoint, q: LatticePoint) -> Tuple[LatticePoint, LatticePoint]:
    return (p, q) if p < q else (q, p)


# ---------------------------------------------------------------- faces


@dataclass(frozen=True)
class BoundaryFace:
    """Maximal connected planar set of boundary facets with one axis label."""

    face_id: int
    label: int
    plane: int
    facets: Tuple[Cell, ...]

    @property
    def axis(self) -> int:
        return label_axis(self.label)

    @property
    def sign(self) -> int:
        return label_sign(self.label)

    @property
    def name(self) -> str:
        return LABEL_NAMES[self.label]

    @property
    def normal(self) -> np.ndarray:
        return label_vector(self.label)

    @property
    def frame(self) -> Tuple[int, int]:
        return face_frame(self.label)

    @property
    def area(self) -> int:
        return len(self.facets)

    @property
    def bounds(self) -> Rect:
        us = [u for u, _ in self.facets]
        vs = [v for _, v in self.facets]
        return min(us), min(vs), max(us) + 1, max(vs) + 1

    def point(self, u: int, v: int) -> LatticePoint:
        return frame_point(self.label, self.plane, u, v)

    def to_xyz(self, uv: np.ndarray) -> np.ndarray:
        """Lattice-space positions of (n, 2) face-frame coordinates."""
        uv = np.atleast_2d(np.asarray(uv, dtype=np.float64))
        ua, va = self.frame
        out = np.zeros((len(uv), 3))
        out[:, self.axis] = self.plane
        out[:, ua] = uv[:, 0]
        out[:, va] = uv[:, 1]
        return out

    @property
    def centroid(self) -> np.ndarray:
        centers = np.array(self.facets, dtype=np.float64) + 0.5
        return self.to_xyz(centers).mean(axis=0)

    @cached_property
    def rectangles(self) -> Tuple[Rect, ...]:
        """Row runs merged upward into rectangles; every split line is horizontal."""
        rows: Dict[int, List[int]] = defaultdict(list)
        for u, v in self.facets:
            rows[v].append(u)
        runs_by_row: Dict[int, List[Tuple[int, int]]] = {}
        for v, us in rows.items():
            us.sort()
            runs = []
            start = prev = us[0]
            for u in us[1:]:
                if u != prev + 1:
                    runs.append((start, prev + 1))
                    start = u
                prev = u
            runs.append((start, prev + 1))
            runs_by_row[v] = runs

        rects: List[Rect] = []
        open_: Dict[Tuple[int, int], int] = {}  # run -> v0
        for v in range(min(rows), max(rows) + 2):
            current = set(runs_by_row.get(v, []))
            for run in sorted(open_):
                if run not in current:
                    rects.append((run[0], open_.pop(run), run[1], v))
            for run in sorted(current):
                open_.setdefault(run, v)
        return tuple(sorted(rects, key=lambda r: (r[1], r[0])))


@dataclass(frozen=True)
class InternalFace:
    """Connected set of facets glued between two cubes (I_j), +axis frame."""

    face_id: int
    axis: int
    plane: int
    facets: Tuple[Cell, ...]

    @property
    def label(self) -> int:
        return 2 * self.axis

    def point(self, u: int, v: int) -> LatticePoint:
        return frame_point(self.label, self.plane, u, v)


@dataclass(frozen=True)
class PolycubeEdge:
    """Crease chain between two corners; `left_face` lies left of start->end seen from outside."""

    edge_id: int
    start: int
    end: int
    points: Tuple[LatticePoint, ...]
    left_face: int
    right_face: int

    @property
    def length(self) -> int:
        return len(self.points) - 1

    @property
    def faces(self) -> Tuple[int, int]:
        return self.left_face, self.right_face


@dataclass(frozen=True)
class CubePatch:
    """One of the six unit-square patches of a lattice cube."""

    label: int
    plane: int
    cell: Cell
    boundary_face: Optional[int]
    internal_face: Optional[int]

    @property
    def is_boundary(self) -> bool:
        return self.boundary_face is not None


@dataclass(frozen=True)
class UnitCubeDomain:
    """A lattice cube with its six patches in label order."""

    cube_id: int
    origin: LatticePoint
    patches: Tuple[CubePatch, ...]


# ------------------------------------------------------------ structure


@dataclass(frozen=True)
class TemplateSpec:
    type_id: int
    name: str
    genus: int
    cubes: Tuple[LatticePoint, ...]


@dataclass(frozen=True, eq=False)
class PolycubeStructure:
    """Union of unit lattice cubes with derived face, edge and corner structure."""

    type_id: int
    name: str
    genus: int
    cubes: Tuple[LatticePoint, ...]

    def __post_init__(self) -> None:
        self._check_cells()
        if self.boundary_genus != self.genus:
            self._invalid(f"boundary genus {self.boundary_genus} != {self.genus}")

    def _invalid(self, reason: str) -> None:
        raise PolycubeError.from_key(
            "INVALID_TEMPLATE",
            "errors.polycube.invalid_template",
            type_id=self.type_id,
            reason=reason,
        )

    def _check_cells(self) -> None:
        cells = self.cube_set
        if not cells or len(cells) != len(self.cubes):
            self._invalid("empty or repeated cubes")

        index = {c: i for i, c in enumerate(self.cubes)}
        rows, cols = [], []
        for c, i in index.items():
            for a in range(3):
                n = list(c)
                n[a] += 1
                j = index.get((n[0], n[1], n[2]))
                if j is not None:
                    rows.append(i)
                    cols.append(j)
        graph = sparse.coo_matrix(
            (np.ones(len(rows)), (rows, cols)), shape=(len(cells), len(cells))
        )
        if connected_components(graph, directed=False)[0] != 1:
            self._invalid("cubes are not face-connected")

        octants = [(dx, dy, dz) for dx in (0, 1) for dy in (0, 1) for dz in (0, 1)]
        points = {
            (c[0] + dx, c[1] + dy, c[2] + dz) for c in cells for dx, dy, dz in octants
        }
        for p in sorted(points):
            filled = [
                o for o in octants if (p[0] - 1 + o[0], p[1] - 1 + o[1], p[2] - 1 + o[2]) in cells
            ]
            if len(filled) == 8:
                self._invalid(f"interior lattice point {p}")
            empty = [o for o in octants if o not in filled]
            if not (_octants_connected(filled) and _octants_connected(empty)):
                self._invalid(f"non-manifold boundary at {p}")

    @cached_property
    def cube_set(self) -> FrozenSet[LatticePoint]:
        return frozenset(self.cubes)

    # ------------------------------------------------------------ facets

    @cached_property
    def _facets(self) -> Tuple[Dict[Tuple[int, int], List[Cell]], Dict[Tuple[int, int], List[Cell]]]:
        """Boundary facets by (label, plane) and internal facets by (axis, plane)."""
        boundary: Dict[Tuple[int, int], List[Cell]] = defaultdict(list)
        internal: Dict[Tuple[int, int], List[Cell]] = defaultdict(list)
        for c in self.cubes:
            for a in range(3):
                for sign in (1, -1):
                    n = list(c)
                    n[a] += sign
                    label = 2 * a + (0 if sign > 0 else 1)
                    ua, va = face_frame(label)
                    plane = c[a] + (1 if sign > 0 else 0)
                    cell = (c[ua], c[va])
                    if (n[0], n[1], n[2]) not in self.cube_set:
                        boundary[(label, plane)].append(cell)
                    elif sign > 0:
                        internal[(a, plane)].append(cell)
        return boundary, internal

    @cached_property
    def boundary_faces(self) -> Tuple[BoundaryFace, ...]:
        found = []
        for (label, plane), cells in self._facets[0].items():
            for comp in _cell_components(cells):
                found.append((label, plane, comp))
        found.sort(key=lambda t: (t[0], t[1], t[2][0]))
        return tuple(
            BoundaryFace(i, label, plane, comp) for i, (label, plane, comp) in enumerate(found)
        )

    @cached_property
    def internal_faces(self) -> Tuple[InternalFace, ...]:
        found = []
        for (axis, plane), cells in self._facets[1].items():
            for comp in _cell_components(cells):
                found.append((axis, plane, comp))
        found.sort(key=lambda t: (t[0], t[1], t[2][0]))
        return tuple(
            InternalFace(i, axis, plane, comp) for i, (axis, plane, comp) in enumerate(found)
        )

    @property
    def n_faces(self) -> int:
        return len(self.boundary_faces)

    @cached_property
    def facet_face(self) -> Dict[Tuple[int, int, Cell], int]:
        """(label, plane, cell) -> boundary face id."""
        return {
            (f.label, f.plane, cell): f.face_id
            for f in self.boundary_faces
            for cell in f.facets
        }

    @cached_property
    def internal_facet_face(self) -> Dict[Tuple[int, int, Cell], int]:
        """(axis, plane, cell) -> internal face id."""
        return {
            (f.axis, f.plane, cell): f.face_id for f in self.internal_faces for cell in f.facets
        }

    @cached_property
    def _left_of(self) -> Dict[Tuple[LatticePoint, LatticePoint], int]:
        """Directed boundary lattice edge -> face on its left seen from outside."""
        left: Dict[Tuple[LatticePoint, LatticePoint], int] = {}
        for f in self.boundary_faces:
            for u, v in f.facets:
                loop = [f.point(u, v), f.point(u + 1, v), f.point(u + 1, v + 1), f.point(u, v + 1)]
                for p, q in zip(loop, loop[1:] + loop[:1]):
                    left[(p, q)] = f.face_id
        return left

    @cached_property
    def boundary_genus(self) -> int:
        left = self._left_of
        points = {p for p, _ in left}
        edges = {lattice_edge(p, q) for p, q in left}
        n_facets = sum(f.area for f in self.boundary_faces)
        chi = len(points) - len(edges) + n_facets
        return (2 - chi) // 2

    # ---------------------------------------------------------- corners

    @cached_property
    def point_faces(self) -> Dict[LatticePoint, Tuple[int, ...]]:
        """Boundary lattice point -> incident boundary face ids."""
        faces: Dict[LatticePoint, set] = defaultdict(set)
        for (p, _), f in self._left_of.items():
            faces[p].add(f)
        return {p: tuple(sorted(fs)) for p, fs in faces.items()}

    @cached_property
    def corners(self) -> Tuple[LatticePoint, ...]:
        labels = {f.face_id: f.label for f in self.boundary_faces}
        return tuple(
            sorted(
                p
                for p, fs in self.point_faces.items()
                if len({labels[f] for f in fs}) >= 3
            )
        )

    @cached_property
    def corner_index(self) -> Dict[LatticePoint, int]:
        return {p: i for i, p in enumerate(self.corners)}

    @cached_property
    def corner_faces(self) -> Tuple[Tuple[int, ...], ...]:
        return tuple(self.point_faces[p] for p in self.corners)

    # ------------------------------------------------------------ edges

    @cached_property
    def crease_edges(self) -> FrozenSet[Tuple[LatticePoint, LatticePoint]]:
        """Undirected lattice edges separating two different boundary faces."""
        left = self._left_of
        return frozenset(
            lattice_edge(p, q) for (p, q), f in left.items() if left[(q, p)] != f
        )

    @cached_property
    def edges(self) -> Tuple[PolycubeEdge, ...]:
        incident: Dict[LatticePoint, List[LatticePoint]] = defaultdict(list)
        for p, q in self.crease_edges:
            incident[p].append(q)
            incident[q].append(p)
        for p, nbrs in incident.items():
            if p not in self.corner_index and len(nbrs) != 2:
                self._invalid(f"crease branches at non-corner point {p}")

        used = set()
        chains = []
        for c in self.corners:
            for nxt in sorted(incident[c]):
                if lattice_edge(c, nxt) in used:
                    continue
                chain = [c, nxt]
                used.add(lattice_edge(c, nxt))
                while chain[-1] not in self.corner_index:
                    cur = chain[-1]
                    step = next(q for q in incident[cur] if lattice_edge(cur, q) not in used)
                    used.add(lattice_edge(cur, step))
                    chain.append(step)
                chains.append(chain)
        if len(used) != len(self.crease_edges):
            self._invalid("crease loop without a corner")

        records = []
        for chain in chains:
            a, b = self.corner_index[chain[0]], self.corner_index[chain[-1]]
            if a > b:
                chain.reverse()
                a, b = b, a
            left = self._left_of[(chain[0], chain[1])]
            right = self._left_of[(chain[1], chain[0])]
            records.append((a, b, left, right, tuple(chain)))
        records.sort(key=lambda r: (r[0], r[1], r[2], r[3], r[4][1]))
        return tuple(
            PolycubeEdge(i, a, b, pts, left, right)
            for i, (a, b, left, right, pts) in enumerate(records)
        )

    @cached_property
    def crease_steps(self) -> Dict[Tuple[LatticePoint, LatticePoint], Tuple[int, int]]:
        """Undirected unit crease edge -> (polycube edge id, step index along its points)."""
        steps = {}
        for e in self.edges:
            for t, (p, q) in enumerate(zip(e.points, e.points[1:])):
                steps[lattice_edge(p, q)] = (e.edge_id, t)
        return steps

    # ------------------------------------------------------------ cubes

    @cached_property
    def unit_cubes(self) -> Tuple[UnitCubeDomain, ...]:
        out = []
        for cube_id, c in enumerate(self.cubes):
            patches = []
            for label in range(6):
                a, sign = label_axis(label), label_sign(label)
                ua, va = face_frame(label)
                plane = c[a] + (1 if sign > 0 else 0)
                cell = (c[ua], c[va])
                boundary = self.facet_face.get((label, plane, cell))
                internal = None
                if boundary is None:
                    pu, pv = face_frame(2 * a)
                    internal = self.internal_facet_face.get((a, plane, (c[pu], c[pv])))
                patches.append(CubePatch(label, plane, cell, boundary, internal))
            out.append(UnitCubeDomain(cube_id, c, tuple(patches)))
        return tuple(out)

    # -------------------------------------------------------- geometry

    @cached_property
    def lattice_bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        cells = np.array(self.cubes, dtype=np.float64)
        return cells.min(axis=0), cells.max(axis=0) + 1.0

    def normalize_points(self, points: np.ndarray) -> np.ndarray:
        """Lattice coordinates into the centered unit-box frame of the cube union."""
        lo, hi = self.lattice_bounds
        extent = float((hi - lo).max())
        return (np.asarray(points, dtype=np.float64) - 0.5 * (lo + hi)) / extent

    def face_centroids(self, normalized: bool = True) -> np.ndarray:
        """(N, 3) centroids of the boundary faces."""
        pts = np.array([f.centroid for f in self.boundary_faces])
        return self.normalize_points(pts) if normalized else pts

    @property
    def surface_area(self) -> int:
        return sum(f.area for f in self.boundary_faces)


def _octants_connected(octs: Sequence[Tuple[int, int, int]]) -> bool:
    if not octs:
        return True
    todo, seen = [octs[0]], {octs[0]}
    members = set(octs)
    while todo:
        o = todo.pop()
        for a in range(3):
            n = list(o)
            n[a] = 1 - n[a]
            t = (n[0], n[1], n[2])
            if t in members and t not in seen:
                seen.add(t)
                todo.append(t)
    return len(seen) == len(members)


def _cell_components(cells: Iterable[Cell]) -> List[Tuple[Cell, ...]]:
    """Edge-connected components of planar unit cells, each sorted."""
    ordered = sorted(set(cells))
    index = {c: i for i, c in enumerate(ordered)}
    rows, cols = [], []
    for (u, v), i in index.items():
        for n in ((u + 1, v), (u, v + 1)):
            j = index.get(n)
            if j is not None:
                rows.append(i)
                cols.append(j)
    size = len(ordered)
    graph = sparse.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(size, size))
    n_comp, comp = connected_components(graph, directed=False)
    groups: List[List[Cell]] = [[] for _ in range(n_comp)]
    for c, k in zip(ordered, comp):
        groups[k].append(c)
    return [tuple(g) for g in groups]


# --------------------------------------------------------------- table


def parse_template_table(text: str) -> Dict[int, TemplateSpec]:
    specs: Dict[int, TemplateSpec] = {}
    header: Optional[Tuple[int, str, int]] = None
    cubes: List[LatticePoint] = []

    def flush() -> None:
        if header is not None:
            specs[header[0]] = TemplateSpec(header[0], header[1], header[2], tuple(cubes))

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "type":
                flush()
                header = (int(parts[1]), parts[2], int(parts[3]))
                cubes = []
            elif header is not None and len(parts) == 3:
                i, j, k = (int(t) for t in parts)
                cubes.append((i, j, k))
            else:
                raise ValueError(line)
        except (ValueError, IndexError):
            raise PolycubeError.from_key(
                "INVALID_TEMPLATE",
                "errors.polycube.invalid_template",
                type_id=header[0] if header else 0,
                reason=f"line {lineno}: {raw.strip()}",
            ) from None
    flush()
    return specs


@lru_cache(maxsize=1)
def template_table() -> Dict[int, TemplateSpec]:
    return parse_template_table(TEMPLATE_TABLE.read_text(encoding="utf-8"))


@lru_cache(maxsize=None)
def template(type_id: int) -> PolycubeStructure:
    """Canonical polycube structure of a template type 1..11."""
    spec = template_table().get(type_id) if isinstance(type_id, int) else None
    if spec is None or not 1 <= type_id <= NUM_TYPES:
        raise PolycubeError.from_key(
            "TYPE_RANGE", "errors.polycube.type_range", type_id=type_id
        )
    pc = PolycubeStructure(spec.type_id, spec.name, spec.genus, spec.cubes)
    logger.debug(
        f"模板 {type_id} ({spec.name}): {len(pc.cubes)} 立方体, "
        f"{pc.n_faces} 边界面, {len(pc.corners)} 角点"
    )
    return pc


def coplanar_label_groups(pc: PolycubeStructure) -> List[Tuple[int, ...]]:
    """Boundary faces sharing a label and a lattice plane without touching."""
    groups: Dict[Tuple[int, int], List[int]] = defaultdict(list)
    for f in pc.boundary_faces:
        groups[(f.label, f.plane)].append(f.face_id)
    return [tuple(ids) for _, ids in sorted(groups.items()) if len(ids) > 1]


def label_groups(pc: PolycubeStructure) -> List[Tuple[int, ...]]:
    """Boundary faces sharing an axis label, any plane; only groups of two or more."""
    groups: Dict[int, List[int]] = defaultdict(list)
    for f in pc.boundary_faces:
        groups[f.label].append(f.face_id)
    return [tuple(ids) for _, ids in sorted(groups.items()) if len(ids) > 1]


def corner_points(pc: PolycubeStructure) -> List[LatticePoint]:
    return list(pc.corners)
