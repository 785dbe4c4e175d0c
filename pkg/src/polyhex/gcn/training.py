"""
GCN训练

Mini-batch training of the classifier (cross-entropy, Adam by default) and of
the centroid regressor (mean squared error, RMSprop by default). Training is
deterministic for a given TrainConfig.rng_seed.
"""

import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..core.errors import ModelError
from ..core.logging import get_logger
from ..core.types import TrainConfig
from ..dataset.generate import TrainingSample
from .adjacency import NormalizedAdjacency, normalize_adjacency
from .model import (
    GcnModel,
    classifier_loss_and_grad,
    forward,
    make_batch,
    regression_loss_and_grad,
)

logger = get_logger(__name__)

DEFAULT_LR_GRID = (1e-2, 1e-3, 1e-4)


# -------------------------------------------------------------- optimizers


class Adam:
    def __init__(self, params: List[np.ndarray], cfg: TrainConfig):
        self.lr, self.b1, self.b2, self.eps = cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params: List[np.ndarray], grads: List[np.ndarray]) -> None:
        self.t += 1
        c1 = 1.0 - self.b1**self.t
        c2 = 1.0 - self.b2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


class RMSprop:
    def __init__(self, params: List[np.ndarray], cfg: TrainConfig):
        self.lr, self.rho, self.eps = cfg.learning_rate, cfg.rho, cfg.eps
        self.s = [np.zeros_like(p) for p in params]

    def step(self, params: List[np.ndarray], grads: List[np.ndarray]) -> None:
        for p, g, s in zip(params, grads, self.s):
            s *= self.rho
            s += (1.0 - self.rho) * g * g
            p -= self.lr * g / (np.sqrt(s) + self.eps)


def make_optimizer(params: List[np.ndarray], cfg: TrainConfig) -> Union[Adam, RMSprop]:
    return Adam(params, cfg) if cfg.optimizer == "adam" else RMSprop(params, cfg)


# ------------------------------------------------------------------ traces


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    train_metric: float
    val_metric: Optional[float]


@dataclass
class TrainResult:
    """Trained model and its per-epoch trace.

    For the classifier the metrics are accuracies; for the regressor they are
    mean squared errors.
    """

    model: GcnModel
    trace: List[EpochRecord] = field(default_factory=list)
    train_indices: List[int] = field(default_factory=list)
    val_indices: List[int] = field(default_factory=list)

    @property
    def final_val_metric(self) -> Optional[float]:
        return self.trace[-1].val_metric if self.trace else None

    def write_trace(self, path: str) -> None:
        lines = ["# epoch loss train val"]
        for r in self.trace:
            val = "nan" if r.val_metric is None else format(r.val_metric, ".17g")
            lines.append(f"{r.epoch} {r.loss:.17g} {r.train_metric:.17g} {val}")
        with open(path, "w", encoding="utf-8") as f:
            f.write("\n".join(lines) + "\n")


def split_indices(n: int, val_fraction: float, seed: int) -> Tuple[List[int], List[int]]:
    """Seeded shuffle split; at least one training sample is kept."""
    order = np.random.default_rng(seed).permutation(n)
    n_val = min(int(round(n * val_fraction)), max(n - 1, 0))
    return sorted(order[n_val:].tolist()), sorted(order[:n_val].tolist())


def _batches(indices: List[int], size: int, rng: np.random.Generator) -> List[List[int]]:
    order = rng.permutation(indices)
    return [order[i : i + size].tolist() for i in range(0, len(order), size)]


# --------------------------------------------------------------- classifier


def predict_outputs(
    model: GcnModel,
    samples: Sequence[TrainingSample],
    adjs: Sequence[NormalizedAdjacency],
    batch_size: int = 64,
) -> np.ndarray:
    out = []
    for i in range(0, len(samples), batch_size):
        chunk = samples[i : i + batch_size]
        batch = make_batch([s.graph for s in chunk], model.kind, adjs[i : i + batch_size])
        out.append(forward(model, batch)[0])
    return np.concatenate(out, axis=0) if out else np.zeros((0, 0))


def accuracy(
    model: GcnModel, samples: Sequence[TrainingSample], adjs: Sequence[NormalizedAdjacency]
) -> float:
    if not samples:
        return float("nan")
    logits = predict_outputs(model, samples, adjs)
    predicted = logits.argmax(axis=1) + 1
    return float(np.mean(predicted == np.array([s.label for s in samples])))


def train_classifier(
    dataset: Sequence[TrainingSample], cfg: Optional[TrainConfig] = None
) -> TrainResult:
    """Mini-batch training of the 11-class polycube classifier."""
    cfg = cfg or TrainConfig()
    if not dataset:
        raise ModelError.from_key("EMPTY_DATASET", "errors.model.empty_dataset")

    started = time.time()
    adjs = [normalize_adjacency(s.graph.adjacency) for s in dataset]
    train_idx, val_idx = split_indices(len(dataset), cfg.val_fraction, cfg.rng_seed)
    model = GcnModel.initialize("classifier", cfg.rng_seed)
    params = model.parameters()
    optimizer = make_optimizer(params, cfg)
    rng = np.random.default_rng(cfg.rng_seed + 1)
    result = TrainResult(model, train_indices=train_idx, val_indices=val_idx)
    logger.info(
        f"开始训练分类器: {len(train_idx)} 训练 / {len(val_idx)} 验证, "
        f"lr={cfg.learning_rate}, {cfg.optimizer}, {cfg.epochs} 轮"
    )

    for epoch in range(1, cfg.epochs + 1):
        total, correct = 0.0, 0
        for chunk in _batches(train_idx, cfg.batch_size, rng):
            batch = make_batch(
                [dataset[i].graph for i in chunk], "classifier", [adjs[i] for i in chunk]
            )
            labels = [dataset[i].label for i in chunk]
            loss, grads, logits = classifier_loss_and_grad(model, batch, labels, cfg.l2_lambda)
            if not np.isfinite(loss):
                raise ModelError.from_key(
                    "DIVERGENCE", "errors.model.divergence", epoch=epoch
                )
            optimizer.step(params, grads)
            total += loss * len(chunk)
            correct += int(np.sum(logits.argmax(axis=1) + 1 == np.array(labels)))

        val_acc = (
            accuracy(model, [dataset[i] for i in val_idx], [adjs[i] for i in val_idx])
            if val_idx
            else None
        )
        record = EpochRecord(epoch, total / len(train_idx), correct / len(train_idx), val_acc)
        result.trace.append(record)
        logger.debug(
            f"epoch {epoch}: loss={record.loss:.6f} train_acc={record.train_metric:.4f} "
            f"val_acc={val_acc}"
        )

    logger.info(
        f"分类器训练完成, 用时 {time.time() - started:.1f}s, "
        f"最终验证准确率 {result.final_val_metric}"
    )
    return result


def search_learning_rate(
    dataset: Sequence[TrainingSample],
    cfg: Optional[TrainConfig] = None,
    grid: Sequence[float] = DEFAULT_LR_GRID,
) -> Tuple[float, Dict[float, TrainResult]]:
    """Train once per learning rate; best validation accuracy wins, then lowest loss."""
    cfg = cfg or TrainConfig()
    results: Dict[float, TrainResult] = {}
    for lr in grid:
        results[lr] = train_classifier(dataset, cfg.model_copy(update={"learning_rate": lr}))

    def score(lr: float) -> Tuple[float, float]:
        r = results[lr]
        val = r.final_val_metric
        return (val if val is not None else r.trace[-1].train_metric, -r.trace[-1].loss)

    best = max(grid, key=score)
    logger.info(f"学习率搜索: 最佳 {best} (候选 {list(grid)})")
    return best, results


# ---------------------------------------------------------------- centroid


def _centroid_targets(dataset: Sequence[TrainingSample]) -> np.ndarray:
    rows = []
    for s in dataset:
        if s.region_centroids is None:
            raise ModelError.from_key(
                "MISSING_TARGETS", "errors.model.missing_targets", seed=s.seed
            )
        rows.append(np.asarray(s.region_centroids).reshape(-1))
    return np.array(rows)


def mean_squared_error(
    model: GcnModel,
    samples: Sequence[TrainingSample],
    adjs: Sequence[NormalizedAdjacency],
) -> float:
    if not samples:
        return float("nan")
    pred = predict_outputs(model, samples, adjs)
    return float(np.mean((pred - _centroid_targets(samples)) ** 2))


def train_centroid(
    dataset: Sequence[TrainingSample], cfg: Optional[TrainConfig] = None
) -> TrainResult:
    """Train the region-centroid regressor of a single polycube type."""
    cfg = cfg or TrainConfig(optimizer="rmsprop")
    if not dataset:
        raise ModelError.from_key("EMPTY_DATASET", "errors.model.empty_dataset")
    types = sorted({s.label for s in dataset})
    if len(types) != 1:
        raise ModelError.from_key("MIXED_TYPES", "errors.model.mixed_types", types=types)

    targets = _centroid_targets(dataset)
    k = targets.shape[1] // 3
    adjs = [normalize_adjacency(s.graph.adjacency) for s in dataset]
    train_idx, val_idx = split_indices(len(dataset), cfg.val_fraction, cfg.rng_seed)
    model = GcnModel.initialize("centroid", cfg.rng_seed, k=k, type_id=types[0])
    params = model.parameters()
    optimizer = make_optimizer(params, cfg)
    rng = np.random.default_rng(cfg.rng_seed + 1)
    result = TrainResult(model, train_indices=train_idx, val_indices=val_idx)
    logger.info(
        f"开始训练质心回归器: 类型 {types[0]}, k={k}, {len(train_idx)} 训练样本, {cfg.optimizer}"
    )

    for epoch in range(1, cfg.epochs + 1):
        total = 0.0
        for chunk in _batches(train_idx, cfg.batch_size, rng):
            batch = make_batch(
                [dataset[i].graph for i in chunk], "centroid", [adjs[i] for i in chunk]
            )
            loss, grads, _ = regression_loss_and_grad(model, batch, targets[chunk], cfg.l2_lambda)
            if not np.isfinite(loss):
                raise ModelError.from_key(
                    "DIVERGENCE", "errors.model.divergence", epoch=epoch
                )
            optimizer.step(params, grads)
            total += loss * len(chunk)

        train_mse = mean_squared_error(
            model, [dataset[i] for i in train_idx], [adjs[i] for i in train_idx]
        )
        val_mse = (
            mean_squared_error(model, [dataset[i] for i in val_idx], [adjs[i] for i in val_idx])
            if val_idx
            else None
        )
        result.trace.append(EpochRecord(epoch, total / len(train_idx), train_mse, val_mse))
        logger.debug(f"epoch {epoch}: loss={total / len(train_idx):.6e} val_mse={val_mse}")

    logger.info(f"质心回归器训练完成, 验证MSE {result.final_val_metric}")
    return result
