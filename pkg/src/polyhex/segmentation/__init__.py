"""Polycube-seeded K-means segmentation of triangle surfaces."""

from .kmeans import ClusterState, assign_nearest, kmeans
from .segment import (
    Segmentation,
    load_segmentation,
    merge_fragments,
    save_segmentation,
    seed_normals,
    segment,
)

__all__ = [
    "ClusterState",
    "kmeans",
    "assign_nearest",
    "Segmentation",
    "seed_normals",
    "segment",
    "merge_fragments",
    "save_segmentation",
    "load_segmentation",
]
