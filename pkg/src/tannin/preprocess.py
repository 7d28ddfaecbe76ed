"""Z-score scaling fit on the training split, and correlation-driven column ordering."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .stats import CorrelationMatrix


@dataclass(frozen=True)
class ScalerParams:
    mean: np.ndarray
    std: np.ndarray

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "ScalerParams":
        return cls(np.array(d["mean"], dtype=float), np.array(d["std"], dtype=float))


@dataclass(frozen=True)
class FeatureOrdering:
    permutation: tuple[int, ...]
    score: float

    def __post_init__(self):
        if sorted(self.permutation) != list(range(len(self.permutation))):
            raise ValueError(f"not a permutation: {self.permutation}")

    def inverse(self) -> "FeatureOrdering":
        inv = [0] * len(self.permutation)
        for pos, src in enumerate(self.permutation):
            inv[src] = pos
        return FeatureOrdering(tuple(inv), self.score)

    def names(self, labels) -> list[str]:
        return [labels[i] for i in self.permutation]

    def to_dict(self) -> dict:
        return {"permutation": list(self.permutation), "score": self.score}

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureOrdering":
        return cls(tuple(int(i) for i in d["permutation"]), float(d["score"]))

    @classmethod
    def identity(cls, d: int) -> "FeatureOrdering":
        return cls(tuple(range(d)), float("nan"))


def _as_matrix(data) -> np.ndarray:
    return data.X if isinstance(data, Dataset) else np.asarray(data, dtype=float)


def fit_scaler(train) -> ScalerParams:
    """Per-feature sample mean and (n-1) standard deviation."""
    X = _as_matrix(train)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("cannot fit a scaler on an empty dataset")
    mean = X.mean(axis=0)
    if X.shape[0] == 1:
        return ScalerParams(mean, np.zeros(X.shape[1]))
    return ScalerParams(mean, X.std(axis=0, ddof=1))


def transform(params: ScalerParams, samples) -> np.ndarray:
    X = _as_matrix(samples)
    if X.ndim != 2 or X.shape[1] != params.mean.size:
        raise ValueError(f"expected {params.mean.size} features, got shape {X.shape}")
    safe = np.where(params.std > 0, params.std, 1.0)
    Z = (X - params.mean) / safe
    Z[:, params.std == 0] = 0.0
    return Z


def inverse_transform(params: ScalerParams, Z) -> np.ndarray:
    Z = np.asarray(Z, dtype=float)
    if Z.ndim != 2 or Z.shape[1] != params.mean.size:
        raise ValueError(f"expected {params.mean.size} features, got shape {Z.shape}")
    return Z * params.std + params.mean


def adjacency_score(permutation, abs_corr: np.ndarray) -> float:
    """Sum of |rho| over neighbouring positions."""
    return float(sum(abs_corr[a, b] for a, b in zip(permutation, permutation[1:])))


def _abs_corr(corr) -> np.ndarray:
    values = corr.values if isinstance(corr, CorrelationMatrix) else np.asarray(corr, dtype=float)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise ValueError(f"correlation matrix must be square, got {values.shape}")
    if not np.allclose(values, values.T, atol=1e-12):
        raise ValueError("correlation matrix is not symmetric")
    return np.abs(values)


def reorder_features(corr) -> FeatureOrdering:
    """Order features so strongly correlated ones sit next to each other.

    Objective: maximize the sum of |rho| over adjacent positions.  Greedy chain
    first: seed with the strongest pair, then grow whichever end has the
    strongest unused neighbour (ties to the smaller index, right end first).
    The chain and the identity order are both polished by local search and the
    better one is kept, so the result never scores below the identity order.
    """
    w = _abs_corr(corr)
    d = w.shape[0]
    if isinstance(corr, CorrelationMatrix) and "quality" in corr.labels:
        raise ValueError("drop the label column before reordering features")
    if d == 1:
        return FeatureOrdering((0,), 0.0)

    best, pair = -1.0, (0, 1)
    for i in range(d):
        for j in range(i + 1, d):
            if w[i, j] > best:
                best, pair = w[i, j], (i, j)
    chain = list(pair)
    unused = [k for k in range(d) if k not in pair]
    while unused:
        right = max(unused, key=lambda k: (w[chain[-1], k], -k))
        left = max(unused, key=lambda k: (w[chain[0], k], -k))
        if w[chain[-1], right] >= w[chain[0], left]:
            chain.append(right)
            unused.remove(right)
        else:
            chain.insert(0, left)
            unused.remove(left)
    chain = _local_search(chain, w)
    fallback = _local_search(list(range(d)), w)
    if adjacency_score(fallback, w) > adjacency_score(chain, w) + 1e-12:
        chain = fallback
    return FeatureOrdering(tuple(chain), adjacency_score(chain, w))


def _local_search(chain, w, max_passes=100):
    """Improve a path by 2-opt (reverse chain[i..j]) and or-opt (move a run of
    1-3 features elsewhere, either way round).  Accepts only strict gains and
    scans moves in a fixed order, so the result is deterministic."""
    chain = list(chain)
    best = adjacency_score(chain, w)
    d = len(chain)
    for _ in range(max_passes):
        improved = False
        for cand in _neighbours(chain, d):
            s = adjacency_score(cand, w)
            if s > best + 1e-12:
                chain, best, improved = cand, s, True
                break
        if not improved:
            break
    return chain


def _neighbours(chain, d):
    for i in range(d - 1):
        for j in range(i + 1, d):
            if not (i == 0 and j == d - 1):
                yield chain[:i] + chain[i : j + 1][::-1] + chain[j + 1 :]
    for length in (1, 2, 3):
        for i in range(d - length + 1):
            seg, rest = chain[i : i + length], chain[:i] + chain[i + length :]
            for k in range(len(rest) + 1):
                if k != i:
                    yield rest[:k] + seg + rest[k:]
                yield rest[:k] + seg[::-1] + rest[k:]


def apply_ordering(ordering: FeatureOrdering, matrix) -> np.ndarray:
    """Column j of the result is column ordering.permutation[j] of the input."""
    X = np.asarray(matrix, dtype=float)
    if X.ndim != 2 or X.shape[1] != len(ordering.permutation):
        raise ValueError(f"ordering covers {len(ordering.permutation)} columns, matrix has shape {X.shape}")
    return X[:, list(ordering.permutation)]
