"""
Graph convolutional networks on triangle dual graphs.

Two variants share one layout, four graph convolutions, a global pooling and a
three-layer linear head:

- classifier: 12 node features, mean pooling, 11 logits (softmax on output);
- centroid regressor: 3 centroid features, max pooling, 3k outputs.

Forward passes run on mini-batches packed as one block-diagonal graph; the
backward pass is written out by hand.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse

from ..core.errors import ModelError
from ..mesh.graph import NODE_FEATURES, FaceGraph
from .adjacency import NormalizedAdjacency, block_diagonal, normalize_adjacency

NUM_CLASSES = 11
GCONV_WIDTHS = (128, 256, 256, 256)
HEAD_WIDTHS = (128, 128)
PROB_FLOOR = 1e-12


def layer_shapes(kind: str, k: int = 0) -> Tuple[List[Tuple[int, int]], List[Tuple[int, int]]]:
    """(graph-convolution shapes, head shapes) of a model kind."""
    n_in = NODE_FEATURES if kind == "classifier" else 3
    n_out = NUM_CLASSES if kind == "classifier" else 3 * k
    dims = [n_in, *GCONV_WIDTHS]
    gconv = list(zip(dims[:-1], dims[1:]))
    head_dims = [GCONV_WIDTHS[-1], *HEAD_WIDTHS, n_out]
    return gconv, list(zip(head_dims[:-1], head_dims[1:]))


@dataclass
class GcnModel:
    """Network weights.

    Attributes:
        kind: "classifier" or "centroid".
        gconv_weights: W1..W4 of the graph convolutions.
        head_weights / head_biases: the three linear layers.
        pooling: "mean" or "max".
        seed: initialization seed.
        k: regressor output points (0 for the classifier).
        type_id: polycube type a regressor was trained for (0 for the classifier).
    """

    kind: str
    gconv_weights: List[np.ndarray]
    head_weights: List[np.ndarray]
    head_biases: List[np.ndarray]
    pooling: str = "mean"
    seed: int = 0
    k: int = 0
    type_id: int = 0

    @classmethod
    def initialize(cls, kind: str, seed: int = 0, k: int = 0, type_id: int = 0) -> "GcnModel":
        """Uniform Glorot initialization in ±sqrt(6 / (fan_in + fan_out)), zero biases."""
        rng = np.random.default_rng(seed)
        gconv_shapes, head_shapes = layer_shapes(kind, k)

        def glorot(shape: Tuple[int, int]) -> np.ndarray:
            limit = np.sqrt(6.0 / (shape[0] + shape[1]))
            return rng.uniform(-limit, limit, size=shape)

        return cls(
            kind=kind,
            gconv_weights=[glorot(s) for s in gconv_shapes],
            head_weights=[glorot(s) for s in head_shapes],
            head_biases=[np.zeros(s[1]) for s in head_shapes],
            pooling="mean" if kind == "classifier" else "max",
            seed=seed,
            k=k,
            type_id=type_id,
        )

    @classmethod
    def zeros(cls, kind: str, k: int = 0, type_id: int = 0) -> "GcnModel":
        model = cls.initialize(kind, 0, k, type_id)
        for p in model.parameters():
            p[...] = 0.0
        return model

    def parameters(self) -> List[np.ndarray]:
        """All tensors in persistence order: W1..W4, then (weight, bias) per head layer."""
        params = list(self.gconv_weights)
        for W, b in zip(self.head_weights, self.head_biases):
            params.extend([W, b])
        return params

    def parameter_names(self) -> List[str]:
        names = [f"gconv.{i}" for i in range(len(self.gconv_weights))]
        for i in range(len(self.head_weights)):
            names.extend([f"head.{i}.weight", f"head.{i}.bias"])
        return names

    def expected_shapes(self) -> List[Tuple[int, ...]]:
        gconv, head = layer_shapes(self.kind, self.k)
        shapes: List[Tuple[int, ...]] = list(gconv)
        for s in head:
            shapes.extend([s, (s[1],)])
        return shapes

    def check(self) -> None:
        """Raise ModelError on a wrong shape table or non-finite weights."""
        actual = [p.shape for p in self.parameters()]
        expected = self.expected_shapes()
        if actual != expected:
            raise ModelError.from_key(
                "SHAPE_MISMATCH",
                "errors.model.shape_mismatch",
                detail=f"expected {expected}, found {actual}",
            )
        for name, p in zip(self.parameter_names(), self.parameters()):
            if not np.isfinite(p).all():
                raise ModelError.from_key(
                    "SHAPE_MISMATCH", "errors.model.shape_mismatch", detail=f"{name} not finite"
                )

    def l2_penalty(self) -> float:
        return float(sum(np.sum(W * W) for W in self.gconv_weights))

    def copy(self) -> "GcnModel":
        return GcnModel(
            self.kind,
            [W.copy() for W in self.gconv_weights],
            [W.copy() for W in self.head_weights],
            [b.copy() for b in self.head_biases],
            self.pooling,
            self.seed,
            self.k,
            self.type_id,
        )


# ------------------------------------------------------------------ layers


def gcn_layer_forward(F: np.ndarray, adj: NormalizedAdjacency, W: np.ndarray) -> np.ndarray:
    """ReLU(Â F W)."""
    if F.shape[1] != W.shape[0] or F.shape[0] != adj.n_nodes:
        raise ModelError.from_key(
            "DIMENSION_MISMATCH",
            "errors.model.dimension_mismatch",
            left=str(F.shape),
            right=f"{adj.n_nodes} nodes, {W.shape}",
        )
    return np.maximum(adj @ (F @ W), 0.0)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


# ------------------------------------------------------------------- batch


@dataclass(frozen=True, eq=False)
class Batch:
    """Several graphs packed into one block-diagonal graph."""

    adjacency: NormalizedAdjacency
    features: np.ndarray
    offsets: np.ndarray  # node ranges: graph g owns offsets[g]:offsets[g+1]

    @property
    def n_graphs(self) -> int:
        return len(self.offsets) - 1

    def mean_pool_matrix(self) -> sparse.csr_matrix:
        counts = np.diff(self.offsets)
        rows = np.repeat(np.arange(self.n_graphs), counts)
        data = np.repeat(1.0 / counts, counts)
        cols = np.arange(self.offsets[-1])
        return sparse.csr_matrix((data, (rows, cols)), shape=(self.n_graphs, self.offsets[-1]))


def make_batch(
    graphs: Sequence[FaceGraph],
    kind: str,
    adjacencies: Optional[Sequence[NormalizedAdjacency]] = None,
) -> Batch:
    """Pack graphs; pass precomputed normalized adjacencies to skip renormalization."""
    adjs = adjacencies or [normalize_adjacency(g.adjacency) for g in graphs]
    if kind == "classifier":
        feats = [g.node_features for g in graphs]
    else:
        feats = [g.centroid_features for g in graphs]
    offsets = np.concatenate([[0], np.cumsum([g.n_nodes for g in graphs])]).astype(np.int64)
    return Batch(block_diagonal(adjs), np.concatenate(feats, axis=0), offsets)


# ----------------------------------------------------------- forward/back


@dataclass
class ForwardCache:
    hidden: List[np.ndarray]  # input then each graph-convolution output
    pre_activation: List[np.ndarray]
    pooled: np.ndarray
    argmax: Optional[np.ndarray]  # (graphs, channels) node index for max pooling
    head_inputs: List[np.ndarray]
    head_pre: List[np.ndarray]


def forward(model: GcnModel, batch: Batch) -> Tuple[np.ndarray, ForwardCache]:
    """Raw outputs (logits or coordinates) per graph plus the backward cache."""
    H = batch.features
    if H.shape[1] != model.gconv_weights[0].shape[0]:
        raise ModelError.from_key(
            "SHAPE_MISMATCH",
            "errors.model.shape_mismatch",
            detail=f"{H.shape[1]} input features for a {model.kind} model",
        )
    hidden, pre = [H], []
    for W in model.gconv_weights:
        Z = batch.adjacency @ (H @ W)
        H = np.maximum(Z, 0.0)
        pre.append(Z)
        hidden.append(H)

    argmax = None
    if model.pooling == "mean":
        pooled = batch.mean_pool_matrix() @ H
    else:
        pooled = np.empty((batch.n_graphs, H.shape[1]))
        argmax = np.empty((batch.n_graphs, H.shape[1]), dtype=np.int64)
        for g in range(batch.n_graphs):
            lo, hi = batch.offsets[g], batch.offsets[g + 1]
            idx = H[lo:hi].argmax(axis=0)
            argmax[g] = lo + idx
            pooled[g] = H[lo + idx, np.arange(H.shape[1])]

    a = pooled
    inputs, head_pre = [], []
    last = len(model.head_weights) - 1
    for i, (W, b) in enumerate(zip(model.head_weights, model.head_biases)):
        inputs.append(a)
        z = a @ W + b
        head_pre.append(z)
        a = np.maximum(z, 0.0) if i < last else z
    return a, ForwardCache(hidden, pre, pooled, argmax, inputs, head_pre)


def backward(
    model: GcnModel, batch: Batch, cache: ForwardCache, d_out: np.ndarray
) -> List[np.ndarray]:
    """Gradients of a scalar loss w.r.t. `model.parameters()`, given dLoss/dOutput."""
    head_grads: List[np.ndarray] = []
    dz = d_out
    for i in reversed(range(len(model.head_weights))):
        W = model.head_weights[i]
        head_grads = [cache.head_inputs[i].T @ dz, dz.sum(axis=0)] + head_grads
        da = dz @ W.T
        if i > 0:
            dz = da * (cache.head_pre[i - 1] > 0.0)
    dpooled = da

    H = cache.hidden[-1]
    if model.pooling == "mean":
        dH = batch.mean_pool_matrix().T @ dpooled
    else:
        assert cache.argmax is not None
        dH = np.zeros_like(H)
        cols = np.broadcast_to(np.arange(H.shape[1]), cache.argmax.shape)
        np.add.at(dH, (cache.argmax, cols), dpooled)

    gconv_grads: List[np.ndarray] = []
    for layer in reversed(range(len(model.gconv_weights))):
        dZ = dH * (cache.pre_activation[layer] > 0.0)
        AdZ = batch.adjacency.matrix.T @ dZ
        gconv_grads.insert(0, cache.hidden[layer].T @ AdZ)
        if layer > 0:
            dH = AdZ @ model.gconv_weights[layer].T
    return gconv_grads + head_grads


# --------------------------------------------------------------- inference


def forward_classify(model: GcnModel, graph: FaceGraph) -> np.ndarray:
    """Class probabilities P1..P11 of one graph."""
    if model.kind != "classifier":
        raise ModelError.from_key(
            "KIND_MISMATCH", "errors.model.kind_mismatch", expected="classifier", found=model.kind
        )
    logits, _ = forward(model, make_batch([graph], "classifier"))
    return softmax(logits[0])


def forward_centroid(model: GcnModel, graph: FaceGraph, k: int) -> np.ndarray:
    """(k, 3) predicted region centroids in the normalized model frame."""
    if model.kind != "centroid":
        raise ModelError.from_key(
            "KIND_MISMATCH", "errors.model.kind_mismatch", expected="centroid", found=model.kind
        )
    if model.head_weights[-1].shape[1] != 3 * k:
        raise ModelError.from_key(
            "SHAPE_MISMATCH",
            "errors.model.shape_mismatch",
            detail=f"model predicts {model.head_weights[-1].shape[1] // 3} points, asked for {k}",
        )
    out, _ = forward(model, make_batch([graph], "centroid"))
    return out[0].reshape(k, 3)


# ------------------------------------------------------------------ losses


def cross_entropy_loss(
    probs: np.ndarray, labels: Sequence[int], lam: float, model: GcnModel
) -> float:
    """Mean cross-entropy over the batch plus `lam` times the sum of squared gconv weights.

    `labels` are type ids 1..11; probabilities are clamped at 1e-12.
    """
    probs = np.atleast_2d(probs)
    idx = np.asarray(labels, dtype=np.int64) - 1
    picked = np.clip(probs[np.arange(len(idx)), idx], PROB_FLOOR, None)
    return float(-np.log(picked).mean() + lam * model.l2_penalty())


def classifier_loss_and_grad(
    model: GcnModel, batch: Batch, labels: Sequence[int], lam: float
) -> Tuple[float, List[np.ndarray], np.ndarray]:
    """Cross-entropy (log-sum-exp form), gradients and logits of a batch."""
    logits, cache = forward(model, batch)
    idx = np.asarray(labels, dtype=np.int64) - 1
    n = len(idx)
    logp = log_softmax(logits)
    loss = -logp[np.arange(n), idx].mean() + lam * model.l2_penalty()
    d_logits = np.exp(logp)
    d_logits[np.arange(n), idx] -= 1.0
    grads = backward(model, batch, cache, d_logits / n)
    for i, W in enumerate(model.gconv_weights):
        grads[i] = grads[i] + 2.0 * lam * W
    return float(loss), grads, logits


def regression_loss_and_grad(
    model: GcnModel, batch: Batch, targets: np.ndarray, lam: float
) -> Tuple[float, List[np.ndarray], np.ndarray]:
    """Mean squared centroid error, gradients and predictions of a batch."""
    pred, cache = forward(model, batch)
    diff = pred - targets
    loss = float(np.mean(diff * diff) + lam * model.l2_penalty())
    grads = backward(model, batch, cache, 2.0 * diff / diff.size)
    for i, W in enumerate(model.gconv_weights):
        grads[i] = grads[i] + 2.0 * lam * W
    return loss, grads, pred
