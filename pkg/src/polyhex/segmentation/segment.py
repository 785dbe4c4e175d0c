"""
多立方体引导的表面分割

Triangles are clustered by their unit normals with one seed per distinct axis
label. Labels that several polycube faces share are then split in centroid
space, seeded by predicted (or known) region centroids. Clusters are matched to
polycube faces and stray fragments are merged into their dominant neighbour.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
from scipy import sparse
from scipy.optimize import linear_sum_assignment
from scipy.sparse.csgraph import connected_components

from ..core.errors import SegmentationError
from ..core.logging import get_logger
from ..core.types import SegmentConfig
from ..gcn.model import GcnModel, forward_centroid
from ..mesh.graph import build_face_graph
from ..mesh.surface import TriMesh, area_weighted_centroid
from ..polycube.structure import PolycubeStructure, label_vector
from .kmeans import kmeans

logger = get_logger(__name__)

MAX_CLEANUP_ROUNDS = 64


@dataclass(frozen=True, eq=False)
class Segmentation:
    """Per-triangle patch ids and the patch -> polycube face bijection."""

    labels: np.ndarray
    patch_to_face: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=np.int64).reshape(-1))
        object.__setattr__(
            self, "patch_to_face", np.asarray(self.patch_to_face, dtype=np.int64).reshape(-1)
        )

    @property
    def k(self) -> int:
        return len(self.patch_to_face)

    @property
    def face_labels(self) -> np.ndarray:
        """Polycube face id per triangle."""
        return self.patch_to_face[self.labels]

    @property
    def face_to_patch(self) -> np.ndarray:
        inv = np.empty_like(self.patch_to_face)
        inv[self.patch_to_face] = np.arange(self.k)
        return inv

    def patch_triangles(self, patch: int) -> np.ndarray:
        return np.flatnonzero(self.labels == patch)

    def with_labels(self, labels: np.ndarray) -> "Segmentation":
        return Segmentation(labels, self.patch_to_face)

    def check(self, n_faces: int) -> None:
        """Raise unless every patch is non-empty and the map is a bijection onto n_faces."""
        if self.k != n_faces or sorted(self.patch_to_face.tolist()) != list(range(n_faces)):
            raise SegmentationError.from_key(
                "SEGMENTATION_MISMATCH",
                "errors.segmentation.mismatch",
                detail=f"{self.k} patches for {n_faces} polycube faces",
            )
        counts = np.bincount(self.labels, minlength=self.k)
        if len(counts) > self.k or (counts == 0).any():
            raise SegmentationError.from_key(
                "SEGMENTATION_MISMATCH",
                "errors.segmentation.mismatch",
                detail=f"empty or unknown patches, sizes {counts.tolist()}",
            )


def seed_normals(pc: PolycubeStructure) -> np.ndarray:
    """One axis unit vector per boundary face, in face order."""
    return np.array([label_vector(f.label) for f in pc.boundary_faces])


def predicted_face_centroids(
    mesh: TriMesh,
    pc: PolycubeStructure,
    centroid_model: Optional[GcnModel] = None,
) -> np.ndarray:
    """(N, 3) region centroid estimates: regressor output, else template geometry."""
    if centroid_model is not None:
        if centroid_model.type_id in (0, pc.type_id) and centroid_model.k == pc.n_faces:
            return forward_centroid(centroid_model, build_face_graph(mesh), pc.n_faces)
        logger.warning(
            f"质心模型 (类型 {centroid_model.type_id}, k={centroid_model.k}) "
            f"与模板 {pc.type_id} 不符, 改用模板面质心"
        )
    else:
        logger.warning("未提供质心模型, 使用模板面质心作为种子")
    return pc.face_centroids(normalized=True)


def segment(
    mesh: TriMesh,
    pc: PolycubeStructure,
    centroid_model: Optional[GcnModel] = None,
    cfg: Optional[SegmentConfig] = None,
    centroids: Optional[np.ndarray] = None,
) -> Segmentation:
    """Segment a normalized mesh into one patch per polycube boundary face.

    `centroids` (N, 3) overrides the centroid predictions (oracle mode).
    """
    cfg = cfg or SegmentConfig()
    faces = pc.boundary_faces
    labels_of_face = np.array([f.label for f in faces])
    distinct = np.unique(labels_of_face)

    normal_state = kmeans(
        mesh.face_normals,
        np.array([label_vector(int(lab)) for lab in distinct]),
        tol=cfg.tol,
        max_iters=cfg.max_iters,
    )
    logger.info(
        f"法向空间K均值: {len(distinct)} 个簇, {normal_state.iterations} 次迭代"
    )

    predicted: Optional[np.ndarray] = None
    if (np.bincount(labels_of_face) > 1).any():
        predicted = (
            np.asarray(centroids, dtype=np.float64)
            if centroids is not None
            else predicted_face_centroids(mesh, pc, centroid_model)
        )

    # Normal seeds are one per distinct label, so faces sharing a label share a
    # cluster. Every label held by more than one face is then split in centroid
    # space, whether or not its faces are coplanar.
    face_of_triangle = np.full(mesh.n_faces, -1, dtype=np.int64)
    for cluster, label in enumerate(distinct.tolist()):
        members = np.flatnonzero(normal_state.assignment == cluster)
        group = np.flatnonzero(labels_of_face == label)
        if len(group) == 1:
            face_of_triangle[members] = group[0]
            continue
        if len(members) < len(group):
            raise SegmentationError.from_key(
                "SEGMENTATION_MISMATCH",
                "errors.segmentation.mismatch",
                detail=f"label {label}: {len(members)} triangles for {len(group)} faces",
            )
        assert predicted is not None
        face_of_triangle[members] = _split_by_centroids(mesh, members, group, predicted, cfg)
        logger.info(f"质心空间细分: 标签 {label} 拆分为 {len(group)} 个面片")

    face_of_triangle = merge_fragments(mesh, face_of_triangle, cfg.min_fragment)
    seg = Segmentation(face_of_triangle, np.arange(pc.n_faces))
    seg.check(pc.n_faces)
    logger.info(f"分割完成: {mesh.n_faces} 个三角形 -> {seg.k} 个面片")
    return seg


def _split_by_centroids(
    mesh: TriMesh,
    members: np.ndarray,
    group: np.ndarray,
    predicted: np.ndarray,
    cfg: SegmentConfig,
) -> np.ndarray:
    """Polycube face per member triangle of one label cluster."""
    points = mesh.face_centroids[members]
    state = kmeans(points, predicted[group], tol=cfg.tol, max_iters=cfg.max_iters)
    located = np.array(
        [
            area_weighted_centroid(mesh, members[state.assignment == j])
            if (state.assignment == j).any()
            else state.centroids[j]
            for j in range(len(group))
        ]
    )
    cost = ((located[:, None, :] - predicted[group][None, :, :]) ** 2).sum(axis=2)
    rows, cols = linear_sum_assignment(cost)
    cluster_face = np.empty(len(group), dtype=np.int64)
    cluster_face[rows] = group[cols]
    return cluster_face[state.assignment]


def merge_fragments(mesh: TriMesh, labels: np.ndarray, min_fragment: int = 0) -> np.ndarray:
    """Give every non-largest connected piece of a patch to its dominant neighbour.

    With `min_fragment` > 0 only pieces smaller than that are merged.
    """
    labels = labels.copy()
    ef = mesh.edge_faces
    for _ in range(MAX_CLEANUP_ROUNDS):
        same = labels[ef[:, 0]] == labels[ef[:, 1]]
        e = ef[same]
        graph = sparse.coo_matrix(
            (np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(mesh.n_faces, mesh.n_faces)
        )
        n_comp, comp = connected_components(graph, directed=False)
        sizes = np.bincount(comp, minlength=n_comp)
        comp_label = np.empty(n_comp, dtype=np.int64)
        comp_label[comp] = labels

        keep: Dict[int, int] = {}
        for c in np.argsort(-sizes, kind="stable"):
            keep.setdefault(int(comp_label[c]), int(c))
        fragments = [
            c
            for c in range(n_comp)
            if keep[int(comp_label[c])] != c and (min_fragment == 0 or sizes[c] < min_fragment)
        ]
        if not fragments:
            break

        across = ef[~same]
        c0, c1 = comp[across[:, 0]], comp[across[:, 1]]
        for c in sorted(fragments, key=lambda c: (sizes[c], c)):
            votes: Dict[int, int] = {}
            for mine, other in ((c0, across[:, 1]), (c1, across[:, 0])):
                for t in other[mine == c]:
                    votes[int(labels[t])] = votes.get(int(labels[t]), 0) + 1
            if votes:
                target = max(sorted(votes), key=lambda lab: votes[lab])
                labels[comp == c] = target
        logger.debug(f"合并 {len(fragments)} 个碎片")
    return labels


# -------------------------------------------------------------------- files


def save_segmentation(seg: Segmentation, path: Union[str, Path]) -> None:
    lines = [
        "# polyhex segmentation",
        f"k {seg.k}",
        "patch_to_face " + " ".join(str(int(f)) for f in seg.patch_to_face),
    ]
    lines.extend(str(int(x)) for x in seg.labels)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_segmentation(path: Union[str, Path]) -> Segmentation:
    def bad(detail: str) -> SegmentationError:
        return SegmentationError.from_key(
            "BAD_FILE", "errors.segmentation.bad_file", detail=f"{path}: {detail}"
        )

    rows = [
        line
        for line in Path(path).read_text(encoding="utf-8").splitlines()
        if line.strip() and not line.startswith("#")
    ]
    try:
        key, k = rows[0].split()
        head = rows[1].split()
        if key != "k" or head[0] != "patch_to_face":
            raise bad("missing header")
        patch_to_face = [int(t) for t in head[1:]]
        labels = [int(t) for t in rows[2:]]
    except (IndexError, ValueError):
        raise bad("malformed header or labels") from None
    if len(patch_to_face) != int(k):
        raise bad(f"k={k} but {len(patch_to_face)} patch entries")
    if labels and (min(labels) < 0 or max(labels) >= int(k)):
        raise bad("patch id out of range")
    return Segmentation(np.array(labels), np.array(patch_to_face))
