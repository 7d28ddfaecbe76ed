"""Mini-batch training loop with SGD or Adam over the flat parameter buffer."""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass

import numpy as np

from ..data import Dataset
from .layers import EVAL, TRAIN
from .model import TrainedModel, stream


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 150
    batch_size: int = 32
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    seed: int = 0
    shuffle: bool = True
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"optimizer must be 'sgd' or 'adam', got {self.optimizer!r}")

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    loss: float
    train_accuracy: float


class SGD:
    def __init__(self, lr):
        self.lr = lr

    def step(self, theta, grad):
        theta -= self.lr * grad


class Adam:
    def __init__(self, size, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.t = 0

    def step(self, theta, grad):
        self.t += 1
        self.m *= self.beta1
        self.m += (1 - self.beta1) * grad
        self.v *= self.beta2
        self.v += (1 - self.beta2) * grad * grad
        step = self.lr * math.sqrt(1 - self.beta2**self.t) / (1 - self.beta1**self.t)
        theta -= step * self.m / (np.sqrt(self.v) + self.eps)


def make_optimizer(config: TrainConfig, size: int):
    if config.optimizer == "sgd":
        return SGD(config.learning_rate)
    return Adam(size, config.learning_rate, config.beta1, config.beta2, config.adam_eps)


def _batches(n, batch_size, rng, shuffle):
    order = rng.permutation(n) if shuffle else np.arange(n)
    batches = [order[i : i + batch_size] for i in range(0, n, batch_size)]
    # a trailing singleton batch cannot be batch-normalized; fold it into its predecessor
    if len(batches) > 1 and len(batches[-1]) == 1:
        batches[-2] = np.concatenate([batches[-2], batches.pop()])
    return batches


def train(model: TrainedModel, train_data, config: TrainConfig, labels=None):
    """Fit `model` in place.  `train_data` is a Dataset or a raw feature matrix
    (then pass `labels`); scaler and ordering on the model are applied first.

    Returns (model, history) with one EpochRecord per epoch: mean mini-batch
    loss and eval-mode accuracy on the training set.
    """
    if isinstance(train_data, Dataset):
        X_raw, y = train_data.X, train_data.y
    else:
        X_raw, y = np.asarray(train_data, dtype=float), np.asarray(labels)
    if len(X_raw) == 0:
        raise TrainingError("empty training set")
    if y.min() < 0 or y.max() >= model.spec.num_classes:
        raise TrainingError(f"labels must lie in [0, {model.spec.num_classes})")
    if model.network.batchnorms and len(X_raw) < 2:
        raise TrainingError("batchnorm needs at least 2 training samples")

    X = model.prepare(X_raw)
    net = model.network
    rng = stream(config.seed, 1)
    opt = make_optimizer(config, net.theta.size)
    history = []
    for epoch in range(1, config.epochs + 1):
        total, seen = 0.0, 0
        for b, idx in enumerate(_batches(len(X), config.batch_size, rng, config.shuffle)):
            loss = net.loss_and_grad(X[idx], y[idx], TRAIN, rng)
            if not math.isfinite(loss) or not np.isfinite(net.grad).all():
                raise TrainingError(f"non-finite loss at epoch {epoch}, batch {b}")
            opt.step(net.theta, net.grad)
            total += loss * len(idx)
            seen += len(idx)
        acc = float((net.forward(X, EVAL).argmax(axis=1) == y).mean())
        history.append(EpochRecord(epoch, total / seen, acc))
    return model, history


def write_history_csv(history, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "loss", "train_accuracy"])
        for r in history:
            w.writerow([r.epoch, repr(r.loss), repr(r.train_accuracy)])
