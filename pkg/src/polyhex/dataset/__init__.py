"""Procedural polycube training data."""

from .deform import DeformationCage, random_deform
from .generate import (
    TrainingSample,
    generate_dataset,
    load_dataset,
    make_sample,
    write_dataset,
)
from .surface import QuadMesh, assemble_surface, catmull_clark, triangulate

__all__ = [
    "QuadMesh",
    "assemble_surface",
    "catmull_clark",
    "triangulate",
    "DeformationCage",
    "random_deform",
    "TrainingSample",
    "make_sample",
    "generate_dataset",
    "write_dataset",
    "load_dataset",
]
