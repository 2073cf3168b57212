"""Mini-batch training loop, evaluation and confusion matrices."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from . import layers
from .network import ModelParams, backward, forward, init_params
from .optim import adam_step, init_adam

if TYPE_CHECKING:
    from ..datasets import LabeledDataset

__all__ = [
    "TrainConfig",
    "EpochMetrics",
    "TrainResult",
    "ConfusionMatrix",
    "train",
    "evaluate",
    "normalize_per_sample",
]

EVAL_BATCH = 32


@dataclass
class TrainConfig:
    """Knobs of the optimizer and the model built by `train`."""

    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    batch_size: int = 32
    max_epochs: int = 30
    seed: int = 0
    val_every: int = 1
    n_filters: int = 1
    filter_size: int = 13
    normalize_inputs: bool = True
    dtype: type = np.float64

    def __post_init__(self):
        for name in ("adam_beta1", "adam_beta2"):
            rate = getattr(self, name)
            if not 0.0 < rate < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {rate}")
        if self.learning_rate < 0:
            raise ValueError(f"learning rate must be >= 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ValueError(f"batch size must be >= 1, got {self.batch_size}")
        if self.max_epochs < 1:
            raise ValueError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if self.val_every < 1:
            raise ValueError(f"val_every must be >= 1, got {self.val_every}")


@dataclass
class EpochMetrics:
    epoch: int
    train_loss: float
    train_accuracy: float
    val_accuracy: float | None


@dataclass
class TrainResult:
    params: ModelParams
    metrics: list[EpochMetrics] = field(default_factory=list)


@dataclass
class ConfusionMatrix:
    """Counts[i, j] = samples of actual class i+1 predicted as class j+1."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValueError(f"confusion matrix must be square, got {c.shape}")
        if np.any(c < 0):
            raise ValueError("confusion matrix counts must be >= 0")
        object.__setattr__(self, "counts", c)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def accuracy(self) -> float:
        return float(np.trace(self.counts)) / self.total

    def to_csv(self) -> str:
        o = self.counts.shape[0]
        header = "actual\\predicted," + ",".join(str(j + 1) for j in range(o))
        rows = [
            f"{i + 1}," + ",".join(str(v) for v in self.counts[i]) for i in range(o)
        ]
        return "\n".join([header, *rows]) + "\n"


def normalize_per_sample(x: np.ndarray) -> np.ndarray:
    """Min-max rescaling of each sample to [0, 1]; constant samples map to zeros."""
    lo = x.min(axis=(1, 2), keepdims=True)
    hi = x.max(axis=(1, 2), keepdims=True)
    span = hi - lo
    span[span == 0] = 1.0
    return (x - lo) / span


def _prepared_arrays(dataset: "LabeledDataset", split: str, normalize: bool, dtype):
    x, y = dataset.arrays(split)
    x = x.astype(dtype, copy=True)
    if normalize:
        x = normalize_per_sample(x)
    return x, np.asarray(y, dtype=np.int64)


def _predict(params: ModelParams, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    preds = np.empty(x.shape[0], dtype=np.int64)
    for s in range(0, x.shape[0], EVAL_BATCH):
        e = min(x.shape[0], s + EVAL_BATCH)
        probs, _ = forward(params, x[s:e], train=False)
        preds[s:e] = layers.classify(probs, rng)
    return preds


def train(dataset: "LabeledDataset", config: TrainConfig) -> TrainResult:
    """Mini-batch optimization over the training split.

    Per epoch the training data is reshuffled, loss/accuracy are
    accumulated over the batches, and the validation split is scored in
    inference mode every `val_every` epochs. The returned parameters are
    the snapshot with the best validation accuracy (the last epoch when
    validation never ran). Deterministic given the seed.
    """
    if len(dataset.train_idx) == 0 or len(dataset.val_idx) == 0:
        raise ValueError("training requires non-empty train and validation splits")
    x_train, y_train = _prepared_arrays(
        dataset, "train", config.normalize_inputs, config.dtype
    )
    x_val, y_val = _prepared_arrays(dataset, "val", config.normalize_inputs, config.dtype)

    rng = np.random.default_rng(config.seed)
    params = init_params(
        input_size=x_train.shape[1],
        n_classes=dataset.class_count,
        n_filters=config.n_filters,
        filter_size=config.filter_size,
        rng=rng,
        dtype=config.dtype,
        normalize_inputs=config.normalize_inputs,
    )
    state = init_adam(params)

    n = x_train.shape[0]
    metrics: list[EpochMetrics] = []
    best_params = None
    best_val = -math.inf
    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(n)
        loss_sum = 0.0
        correct = 0
        for s in range(0, n, config.batch_size):
            batch = order[s : s + config.batch_size]
            xb, yb = x_train[batch], y_train[batch]
            probs, cache = forward(params, xb, train=True)
            params.bn_mean, params.bn_var = cache.bn_batch_stats
            params.bn_batches += 1
            loss_sum += layers.cross_entropy(probs, yb) * len(batch)
            correct += int((layers.classify(probs, rng) == yb).sum())
            grads = backward(params, cache, yb)
            adam_step(
                params,
                grads,
                state,
                learning_rate=config.learning_rate,
                beta1=config.adam_beta1,
                beta2=config.adam_beta2,
                eps=config.adam_epsilon,
            )
        val_acc = None
        if epoch % config.val_every == 0:
            val_acc = float(np.mean(_predict(params, x_val, rng) == y_val))
            if val_acc > best_val:
                best_val = val_acc
                best_params = params.clone()
        metrics.append(
            EpochMetrics(
                epoch=epoch,
                train_loss=loss_sum / n,
                train_accuracy=correct / n,
                val_accuracy=val_acc,
            )
        )
    final = best_params if best_params is not None else params
    return TrainResult(params=final, metrics=metrics)


def evaluate(
    params: ModelParams,
    dataset: "LabeledDataset",
    split: str = "test",
    seed: int = 0,
) -> ConfusionMatrix:
    """Inference-mode scoring of a split as an actual-by-predicted count matrix."""
    x, y = _prepared_arrays(dataset, split, params.normalize_inputs, params.dtype)
    if x.shape[0] == 0:
        raise ValueError(f"split {split!r} is empty")
    o = params.n_classes
    if y.min() < 1 or y.max() > o:
        raise ValueError(f"labels must lie in 1..{o}")
    preds = _predict(params, x, np.random.default_rng(seed))
    counts = np.zeros((o, o), dtype=np.int64)
    np.add.at(counts, (y - 1, preds - 1), 1)
    return ConfusionMatrix(counts)
