"""
Mesh file I/O: Wavefront OBJ for triangle surfaces, legacy ASCII VTK for
hexahedral volumes.
"""

from pathlib import Path
from typing import Dict, Iterator, List, Optional, Tuple, Union

import numpy as np

from ..core.errors import MeshError
from ..core.logging import get_logger
from .surface import TriMesh
from .volume import HexMesh

logger = get_logger(__name__)

PathLike = Union[str, Path]

VTK_HEXAHEDRON = 12


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


# --------------------------------------------------------------------- OBJ


def _parse_index(token: str, n_vertices: int) -> int:
    raw = int(token.split("/")[0])
    return raw - 1 if raw > 0 else n_vertices + raw


def load_tri_mesh(path: PathLike) -> TriMesh:
    """Read a triangle-only OBJ surface; `v` and `f` records are used."""
    vertices: List[Tuple[float, float, float]] = []
    faces: List[Tuple[int, int, int]] = []
    ignored: Dict[str, int] = {}

    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            tag = parts[0]
            try:
                if tag == "v":
                    x, y, z = (float(t) for t in parts[1:4])
                    vertices.append((x, y, z))
                elif tag == "f":
                    if len(parts) != 4:
                        raise MeshError.from_key(
                            "NON_TRIANGLE_FACE",
                            "errors.mesh.non_triangle_face",
                            face=len(faces),
                            count=len(parts) - 1,
                        )
                    a, b, c = (_parse_index(t, len(vertices)) for t in parts[1:4])
                    faces.append((a, b, c))
                else:
                    ignored[tag] = ignored.get(tag, 0) + 1
            except ValueError:
                raise MeshError.from_key(
                    "PARSE_FAILURE",
                    "errors.mesh.parse_failure",
                    line=lineno,
                    text=line.strip(),
                ) from None

    for tag, count in sorted(ignored.items()):
        logger.warning(f"忽略OBJ记录 '{tag}' ({count} 条): {path}")
    if not vertices or not faces:
        raise MeshError.from_key("EMPTY_MESH", "errors.mesh.empty_mesh")

    mesh = TriMesh(np.array(vertices), np.array(faces))
    logger.debug(f"读取 {path}: {mesh.n_vertices} 顶点, {mesh.n_faces} 三角形")
    return mesh


def save_tri_mesh(mesh: TriMesh, path: PathLike) -> None:
    """Write `v`/`f` records with round-trip float precision."""
    lines = ["# polyhex surface"]
    lines.extend(f"v {_fmt(x)} {_fmt(y)} {_fmt(z)}" for x, y, z in mesh.vertices)
    lines.extend(f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.faces.tolist())
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# --------------------------------------------------------------------- VTK


def save_hex_mesh(
    mesh: HexMesh,
    path: PathLike,
    scaled_jacobian: Optional[np.ndarray] = None,
) -> None:
    """Write a legacy ASCII VTK unstructured grid of hexahedra."""
    if mesh.n_vertices == 0 or mesh.n_elements == 0:
        raise MeshError.from_key("EMPTY_MESH", "errors.mesh.empty_mesh")

    n, m = mesh.n_vertices, mesh.n_elements
    out = [
        "# vtk DataFile Version 3.0",
        "polyhex hex mesh",
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {n} double",
    ]
    out.extend(f"{_fmt(x)} {_fmt(y)} {_fmt(z)}" for x, y, z in mesh.vertices)
    out.append(f"CELLS {m} {m * 9}")
    out.extend("8 " + " ".join(str(i) for i in e) for e in mesh.elements.tolist())
    out.append(f"CELL_TYPES {m}")
    out.extend([str(VTK_HEXAHEDRON)] * m)
    if scaled_jacobian is not None:
        out.append(f"CELL_DATA {m}")
        out.append("SCALARS scaled_jacobian double 1")
        out.append("LOOKUP_TABLE default")
        out.extend(_fmt(v) for v in np.asarray(scaled_jacobian).reshape(-1))
    if mesh.boundary_tags is not None:
        out.append(f"POINT_DATA {n}")
        out.append("SCALARS boundary_tag int 1")
        out.append("LOOKUP_TABLE default")
        out.extend(str(int(t)) for t in mesh.boundary_tags)

    try:
        Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")
    except OSError as exc:
        raise MeshError(
            code="UNWRITABLE", message=f"{path}: {exc}", details={"path": str(path)}
        ) from exc
    logger.info(f"写出六面体网格 {path}: {n} 顶点, {m} 单元")


def _tokens(text: str) -> Iterator[str]:
    for line in text.splitlines():
        yield from line.split()


def load_hex_mesh(path: PathLike) -> HexMesh:
    """Read a file written by `save_hex_mesh` (or any hex-only legacy VTK grid)."""
    text = Path(path).read_text(encoding="utf-8")
    head, _, body = text.partition("DATASET")
    if "ASCII" not in head or not body.split() or body.split()[0] != "UNSTRUCTURED_GRID":
        raise MeshError.from_key(
            "VTK_FORMAT", "errors.mesh.vtk_format", detail="not an ASCII unstructured grid"
        )
    tokens = _tokens(body)
    next(tokens)  # UNSTRUCTURED_GRID

    vertices = np.zeros((0, 3))
    elements = np.zeros((0, 8), dtype=np.int64)
    tags: Optional[np.ndarray] = None
    section = ""
    for tok in tokens:
        if tok == "POINTS":
            n = int(next(tokens))
            next(tokens)
            vertices = np.array([float(next(tokens)) for _ in range(3 * n)]).reshape(n, 3)
        elif tok == "CELLS":
            m = int(next(tokens))
            next(tokens)
            rows = []
            for _ in range(m):
                k = int(next(tokens))
                ids = [int(next(tokens)) for _ in range(k)]
                if k != 8:
                    raise MeshError.from_key(
                        "VTK_FORMAT", "errors.mesh.vtk_format", detail=f"{k}-node cell"
                    )
                rows.append(ids)
            elements = np.array(rows, dtype=np.int64).reshape(-1, 8)
        elif tok == "CELL_TYPES":
            m = int(next(tokens))
            types = {int(next(tokens)) for _ in range(m)}
            if types - {VTK_HEXAHEDRON}:
                raise MeshError.from_key(
                    "VTK_FORMAT", "errors.mesh.vtk_format", detail=f"cell types {types}"
                )
        elif tok in ("CELL_DATA", "POINT_DATA"):
            section = tok
            next(tokens)
        elif tok == "SCALARS":
            name = next(tokens)
            next(tokens)  # data type
            if next(tokens) == "1":
                next(tokens)  # LOOKUP_TABLE
            next(tokens)  # table name
            count = len(elements) if section == "CELL_DATA" else len(vertices)
            values = [next(tokens) for _ in range(count)]
            if section == "POINT_DATA" and name == "boundary_tag":
                tags = np.array([int(v) for v in values], dtype=np.int64)

    mesh = HexMesh(vertices, elements, tags)
    mesh.validate()
    return mesh
