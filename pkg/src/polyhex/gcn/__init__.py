"""Graph convolutional classifier and centroid regressor."""

from .adjacency import NormalizedAdjacency, normalize_adjacency
from .model import (
    GcnModel,
    cross_entropy_loss,
    forward_centroid,
    forward_classify,
    gcn_layer_forward,
)
from .persistence import load_model, save_model
from .training import (
    TrainResult,
    search_learning_rate,
    train_centroid,
    train_classifier,
)

__all__ = [
    "NormalizedAdjacency",
    "normalize_adjacency",
    "GcnModel",
    "gcn_layer_forward",
    "forward_classify",
    "forward_centroid",
    "cross_entropy_loss",
    "train_classifier",
    "train_centroid",
    "search_learning_rate",
    "TrainResult",
    "save_model",
    "load_model",
]
