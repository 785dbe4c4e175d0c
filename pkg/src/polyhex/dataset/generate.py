"""
训练数据生成

assemble -> subdivide -> triangulate -> normalize -> deform -> normalize,
one deterministic sample per seed. Samples can be written to and read from a
directory of OBJ files with a label manifest.
"""

from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterable, List, Optional, Tuple, Union

import numpy as np

from ..core.errors import DatasetError
from ..core.logging import get_logger
from ..core.types import DatasetConfig
from ..mesh.graph import FaceGraph, build_face_graph
from ..mesh.io import load_tri_mesh, save_tri_mesh
from ..mesh.surface import TriMesh, area_weighted_centroid, normalize_to_unit_box
from ..polycube.structure import template
from .deform import random_deform
from .surface import assemble_surface, catmull_clark, triangle_labels, triangulate

logger = get_logger(__name__)

MANIFEST = "manifest.txt"
LABELS_SUFFIX = ".labels"


@dataclass(frozen=True, eq=False)
class TrainingSample:
    """A generated mesh with its template type.

    Attributes:
        graph: dual graph fed to the networks.
        label: template type id 1..11.
        seed: RNG seed the sample was generated with.
        mesh: the normalized, deformed surface.
        face_labels: per-triangle template boundary face id, if known.
        region_centroids: (N, 3) area-weighted centroid of each template face
            region, the regression target of the centroid network.
    """

    graph: FaceGraph
    label: int
    seed: int
    mesh: TriMesh
    face_labels: Optional[np.ndarray] = None
    region_centroids: Optional[np.ndarray] = None


def region_centroids(mesh: TriMesh, face_labels: np.ndarray, n_regions: int) -> np.ndarray:
    return np.array(
        [
            area_weighted_centroid(mesh, np.flatnonzero(face_labels == r))
            for r in range(n_regions)
        ]
    )


@lru_cache(maxsize=None)
def template_surface(type_id: int, levels: int) -> Tuple[TriMesh, np.ndarray]:
    """Undeformed, normalized triangle surface of a template with face labels."""
    quads = catmull_clark(assemble_surface(template(type_id)), levels)
    return normalize_to_unit_box(triangulate(quads)), triangle_labels(quads)


def make_sample(type_id: int, seed: int, cfg: Optional[DatasetConfig] = None) -> TrainingSample:
    cfg = cfg or DatasetConfig()
    pc = template(type_id)
    base, labels = template_surface(type_id, cfg.subdivision_levels)
    deformed = random_deform(
        base,
        cage_resolution=cfg.cage_resolution,
        sigma=cfg.sigma,
        rng_seed=seed,
        perturb_fraction=cfg.perturb_fraction,
        margin=cfg.cage_margin,
        max_attempts=cfg.max_attempts,
    )
    mesh = normalize_to_unit_box(deformed)

    chi = mesh.euler_characteristic
    if chi != 2 - 2 * pc.genus:
        raise DatasetError.from_key(
            "GENUS_CHANGED", "errors.dataset.genus_changed", seed=seed, chi=chi, genus=pc.genus
        )
    return TrainingSample(
        graph=build_face_graph(mesh),
        label=type_id,
        seed=seed,
        mesh=mesh,
        face_labels=labels,
        region_centroids=region_centroids(mesh, labels, pc.n_faces),
    )


def generate_dataset(
    types: Iterable[int],
    per_type: int,
    base_seed: int = 0,
    cfg: Optional[DatasetConfig] = None,
) -> List[TrainingSample]:
    """`per_type` samples per template; sample i uses seed base_seed + i."""
    if per_type < 1:
        raise DatasetError.from_key(
            "INVALID_REQUEST", "errors.dataset.per_type", per_type=per_type
        )
    cfg = cfg or DatasetConfig()
    type_list = list(types)
    samples = []
    index = 0
    for type_id in type_list:
        for _ in range(per_type):
            samples.append(make_sample(type_id, base_seed + index, cfg))
            index += 1
        logger.info(f"类型 {type_id}: 已生成 {per_type} 个样本")
    logger.info(f"数据集生成完成: {len(samples)} 个样本, {len(type_list)} 种类型")
    return samples


# ------------------------------------------------------------------- files


def sample_filename(sample: TrainingSample) -> str:
    return f"type{sample.label:02d}_{sample.seed:06d}.obj"


def write_dataset(samples: Iterable[TrainingSample], out_dir: Union[str, Path]) -> Path:
    """OBJ + per-face label sidecar per sample and a `filename type_id seed` manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = []
    for sample in samples:
        name = sample_filename(sample)
        save_tri_mesh(sample.mesh, out / name)
        if sample.face_labels is not None:
            (out / (name + LABELS_SUFFIX)).write_text(
                "\n".join(str(int(x)) for x in sample.face_labels) + "\n", encoding="utf-8"
            )
        lines.append(f"{name} {sample.label} {sample.seed}")
    manifest = out / MANIFEST
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info(f"写出 {len(lines)} 个样本到 {out}")
    return manifest


def load_dataset(directory: Union[str, Path]) -> List[TrainingSample]:
    """Read a directory written by `write_dataset`."""
    root = Path(directory)
    manifest = root / MANIFEST
    if not manifest.exists():
        raise DatasetError.from_key(
            "MISSING_FILE", "errors.pipeline.missing_file", path=str(manifest)
        )

    samples = []
    for lineno, raw in enumerate(manifest.read_text(encoding="utf-8").splitlines(), start=1):
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        parts = raw.split()
        try:
            name, type_id, seed = parts[0], int(parts[1]), int(parts[2])
        except (IndexError, ValueError):
            raise DatasetError.from_key(
                "MANIFEST", "errors.dataset.manifest", line=lineno, text=raw.strip()
            ) from None
        mesh = load_tri_mesh(root / name)
        labels = None
        centroids = None
        sidecar = root / (name + LABELS_SUFFIX)
        if sidecar.exists():
            labels = np.array(sidecar.read_text(encoding="utf-8").split(), dtype=np.int64)
            centroids = region_centroids(mesh, labels, template(type_id).n_faces)
        samples.append(
            TrainingSample(build_face_graph(mesh), type_id, seed, mesh, labels, centroids)
        )
    logger.info(f"读取数据集 {root}: {len(samples)} 个样本")
    return samples
