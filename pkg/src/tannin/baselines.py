"""The comparison classifiers: kNN, multinomial logistic regression, a CART
random forest and a one-vs-rest linear SVM, all behind fit/predict."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .nn.layers import softmax

NUM_CLASSES = 10
KINDS = ("knn", "logistic_regression", "random_forest", "linear_svm")

DEFAULTS = {
    "knn": {"k": 5},
    "logistic_regression": {"l2": 1e-4, "learning_rate": 0.5, "epochs": 500},
    "random_forest": {
        "n_trees": 200,
        "max_depth": 12,
        "min_leaf": 2,
        "feature_subsample": "sqrt",
        "bootstrap": True,
    },
    "linear_svm": {"C": 1.0, "learning_rate": 0.05, "epochs": 500},
}

DISPLAY_NAMES = {"knn": "kNN", "linear_svm": "SVM", "logistic_regression": "LR", "random_forest": "RF"}


@dataclass(frozen=True)
class BaselineSpec:
    kind: str
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown baseline kind {self.kind!r}; expected one of {KINDS}")
        unknown = set(self.hyperparameters) - set(DEFAULTS[self.kind])
        if unknown:
            raise ValueError(f"unknown hyperparameters for {self.kind}: {sorted(unknown)}")
        hp = self.resolved()
        if self.kind == "knn" and not (isinstance(hp["k"], int) and hp["k"] >= 1):
            raise ValueError("k must be an integer >= 1")
        if self.kind == "random_forest":
            if hp["n_trees"] < 1:
                raise ValueError("n_trees must be >= 1")
            if hp["min_leaf"] < 1:
                raise ValueError("min_leaf must be >= 1")
            if hp["max_depth"] is not None and hp["max_depth"] < 0:
                raise ValueError("max_depth must be >= 0 or None")
        if self.kind == "linear_svm" and not hp["C"] > 0:
            raise ValueError("C must be > 0")
        if self.kind in ("logistic_regression", "linear_svm"):
            if not hp["learning_rate"] > 0 or hp["epochs"] < 1:
                raise ValueError("learning_rate must be > 0 and epochs >= 1")
            if hp.get("l2", 0.0) < 0:
                raise ValueError("l2 must be >= 0")

    def resolved(self) -> dict:
        return {**DEFAULTS[self.kind], **self.hyperparameters}

    def to_dict(self) -> dict:
        return {"kind": self.kind, "hyperparameters": self.resolved(), "seed": self.seed}


def _check_train(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("empty training set")
    if y.shape != (X.shape[0],):
        raise ValueError("labels do not match samples")
    if y.min() < 0 or y.max() >= NUM_CLASSES:
        raise ValueError(f"labels must lie in [0, {NUM_CLASSES})")
    return X, y


def _vote(counts) -> int:
    """argmax with ties to the smaller label."""
    return int(np.argmax(counts))


class Classifier:
    spec: BaselineSpec
    n_features: int

    def _check_query(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got shape {X.shape}")
        return X


# ------------------------------------------------------------------- kNN

class KNearestNeighbors(Classifier):
    def __init__(self, spec):
        self.spec = spec
        self.k = spec.resolved()["k"]

    def fit(self, X, y):
        self.X, self.y = _check_train(X, y)
        self.n_features = self.X.shape[1]
        return self

    def predict(self, X):
        X = self._check_query(X)
        k = min(self.k, len(self.X))
        d2 = (X**2).sum(1)[:, None] - 2 * X @ self.X.T + (self.X**2).sum(1)[None, :]
        dist = np.sqrt(np.maximum(d2, 0.0))
        # stable sort: equidistant training points are taken in training order
        nearest = np.argsort(dist, axis=1, kind="stable")[:, :k]
        out = np.empty(len(X), dtype=np.int64)
        with np.errstate(divide="ignore"):
            for i, nb in enumerate(nearest):
                labels = self.y[nb]
                counts = np.bincount(labels, minlength=NUM_CLASSES)
                tied = np.flatnonzero(counts == counts.max())
                if len(tied) == 1:
                    out[i] = tied[0]
                    continue
                inv = 1.0 / dist[i, nb]
                weight = np.array([inv[labels == c].sum() for c in tied])
                out[i] = tied[np.flatnonzero(weight == weight.max())[0]]
        return out

    def state(self):
        return {"X": self.X.tolist(), "y": self.y.tolist()}

    def load_state(self, s):
        self.X, self.y = np.array(s["X"], dtype=float), np.array(s["y"], dtype=np.int64)
        self.n_features = self.X.shape[1]


# ---------------------------------------------------- logistic regression

class LogisticRegression(Classifier):
    """Multinomial softmax regression, full-batch gradient descent, L2 on weights."""

    def __init__(self, spec):
        self.spec = spec
        hp = spec.resolved()
        self.l2, self.lr, self.epochs = hp["l2"], hp["learning_rate"], hp["epochs"]
        self.loss_history = []

    def loss(self, X, y):
        p = softmax(X @ self.W.T + self.b)
        return float(-np.log(p[np.arange(len(y)), y]).mean() + 0.5 * self.l2 * (self.W**2).sum())

    def fit(self, X, y):
        X, y = _check_train(X, y)
        n, d = X.shape
        self.n_features = d
        self.W = np.zeros((NUM_CLASSES, d))
        self.b = np.zeros(NUM_CLASSES)
        onehot = np.eye(NUM_CLASSES)[y]
        self.loss_history = []
        for _ in range(self.epochs):
            p = softmax(X @ self.W.T + self.b)
            self.loss_history.append(float(-np.log(p[np.arange(n), y]).mean() + 0.5 * self.l2 * (self.W**2).sum()))
            g = (p - onehot) / n
            self.W -= self.lr * (g.T @ X + self.l2 * self.W)
            self.b -= self.lr * g.sum(0)
        self.loss_history.append(self.loss(X, y))
        return self

    def decision_function(self, X):
        return self._check_query(X) @ self.W.T + self.b

    def predict(self, X):
        return np.argmax(self.decision_function(X), axis=1)

    def state(self):
        return {"W": self.W.tolist(), "b": self.b.tolist()}

    def load_state(self, s):
        self.W, self.b = np.array(s["W"], dtype=float), np.array(s["b"], dtype=float)
        self.n_features = self.W.shape[1]


# ------------------------------------------------------------- linear SVM

class LinearSVM(Classifier):
    """One-vs-rest linear SVMs trained jointly by full-batch subgradient descent on
    0.5 * ||w||^2 / (C n) + mean hinge loss, with a 1/sqrt(t) step decay."""

    def __init__(self, spec):
        self.spec = spec
        hp = spec.resolved()
        self.C, self.lr, self.epochs = hp["C"], hp["learning_rate"], hp["epochs"]

    def fit(self, X, y):
        X, y = _check_train(X, y)
        n, d = X.shape
        self.n_features = d
        lam = 1.0 / (self.C * n)
        signs = np.where(np.eye(NUM_CLASSES)[y] > 0, 1.0, -1.0)  # (n, classes)
        self.W = np.zeros((NUM_CLASSES, d))
        self.b = np.zeros(NUM_CLASSES)
        for t in range(1, self.epochs + 1):
            margin = signs * (X @ self.W.T + self.b)
            active = (margin < 1.0) * signs  # subgradient of the hinge is -y where active
            step = self.lr / math.sqrt(t)
            self.W -= step * (lam * self.W - active.T @ X / n)
            self.b -= step * (-active.sum(0) / n)
        return self

    def decision_function(self, X):
        return self._check_query(X) @ self.W.T + self.b

    def predict(self, X):
        return np.argmax(self.decision_function(X), axis=1)

    def state(self):
        return {"W": self.W.tolist(), "b": self.b.tolist()}

    def load_state(self, s):
        self.W, self.b = np.array(s["W"], dtype=float), np.array(s["b"], dtype=float)
        self.n_features = self.W.shape[1]


# ----------------------------------------------------------- CART / forest

class DecisionTree:
    """CART classifier on Gini impurity.  Thresholds are midpoints between
    consecutive distinct values; a sample goes left when x[f] <= threshold."""

    def __init__(self, max_depth=None, min_leaf=1, max_features=None, rng=None):
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.max_features = max_features
        self.rng = rng

    def fit(self, X, y):
        X, y = _check_train(X, y)
        self.n_features = X.shape[1]
        self.feature, self.threshold, self.left, self.right, self.label = [], [], [], [], []
        self._grow(X, y, np.arange(len(y)), 0)
        self._freeze()
        return self

    def _freeze(self):
        self.feature = np.array(self.feature, dtype=np.int64)
        self.threshold = np.array(self.threshold, dtype=float)
        self.left = np.array(self.left, dtype=np.int64)
        self.right = np.array(self.right, dtype=np.int64)
        self.label = np.array(self.label, dtype=np.int64)

    def _new_node(self, label):
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.label.append(label)
        return len(self.label) - 1

    def _grow(self, X, y, idx, depth):
        counts = np.bincount(y[idx], minlength=NUM_CLASSES)
        node = self._new_node(_vote(counts))
        if (self.max_depth is not None and depth >= self.max_depth) or counts.max() == len(idx):
            return node
        best = self._best_split(X, y, idx)
        if best is None:
            return node
        f, thr = best
        goes_left = X[idx, f] <= thr
        self.feature[node], self.threshold[node] = f, thr
        self.left[node] = self._grow(X, y, idx[goes_left], depth + 1)
        self.right[node] = self._grow(X, y, idx[~goes_left], depth + 1)
        return node

    def _candidate_features(self):
        d = self.n_features
        if self.max_features is None or self.max_features >= d:
            return np.arange(d)
        return np.sort(self.rng.choice(d, size=self.max_features, replace=False))

    def _best_split(self, X, y, idx):
        m = len(idx)
        if m < 2 * self.min_leaf:
            return None
        onehot = np.eye(NUM_CLASSES)[y[idx]]
        n_left = np.arange(1, m)
        n_right = m - n_left
        valid_size = (n_left >= self.min_leaf) & (n_right >= self.min_leaf)
        best_score, best = np.inf, None
        for f in self._candidate_features():
            xs = X[idx, f]
            order = np.argsort(xs, kind="stable")
            xs = xs[order]
            left = np.cumsum(onehot[order], axis=0)[:-1]
            right = left[-1] + onehot[order[-1]] - left
            gini_l = n_left - (left**2).sum(1) / n_left
            gini_r = n_right - (right**2).sum(1) / n_right
            # n_left*gini(left) + n_right*gini(right), up to a constant factor 1/m
            score = gini_l + gini_r
            ok = valid_size & (xs[1:] > xs[:-1])
            if not ok.any():
                continue
            score = np.where(ok, score, np.inf)
            i = int(np.argmin(score))
            if score[i] < best_score - 1e-12:
                best_score, best = score[i], (int(f), float((xs[i] + xs[i + 1]) / 2))
        return best

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        node = np.zeros(len(X), dtype=np.int64)
        rows = np.arange(len(X))
        while True:
            internal = self.feature[node] >= 0
            if not internal.any():
                return self.label[node]
            f = np.where(internal, self.feature[node], 0)
            go_left = X[rows, f] <= self.threshold[node]
            nxt = np.where(go_left, self.left[node], self.right[node])
            node = np.where(internal, nxt, node)

    def state(self):
        return {k: getattr(self, k).tolist() for k in ("feature", "threshold", "left", "right", "label")}

    @classmethod
    def from_state(cls, s, n_features):
        t = cls()
        for k in ("feature", "threshold", "left", "right", "label"):
            setattr(t, k, s[k])
        t.n_features = n_features
        t._freeze()
        return t


def _resolve_max_features(setting, d):
    if setting in (None, "all"):
        return None
    if setting == "sqrt":
        return math.ceil(math.sqrt(d))
    if isinstance(setting, float) and 0 < setting <= 1:
        return max(1, math.ceil(setting * d))
    if isinstance(setting, int) and setting >= 1:
        return setting
    raise ValueError(f"invalid feature_subsample {setting!r}")


class RandomForest(Classifier):
    """Bagged CART trees; tree i draws from its own stream seeded by (seed, i)."""

    def __init__(self, spec):
        self.spec = spec
        hp = spec.resolved()
        self.n_trees, self.max_depth, self.min_leaf = hp["n_trees"], hp["max_depth"], hp["min_leaf"]
        self.feature_subsample, self.bootstrap = hp["feature_subsample"], hp["bootstrap"]
        self.trees = []

    def fit(self, X, y):
        X, y = _check_train(X, y)
        n, d = X.shape
        self.n_features = d
        max_features = _resolve_max_features(self.feature_subsample, d)
        self.trees = []
        for i in range(self.n_trees):
            rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([self.spec.seed, i])))
            rows = rng.integers(0, n, size=n) if self.bootstrap else np.arange(n)
            tree = DecisionTree(self.max_depth, self.min_leaf, max_features, rng)
            self.trees.append(tree.fit(X[rows], y[rows]))
        return self

    def votes(self, X):
        X = self._check_query(X)
        counts = np.zeros((len(X), NUM_CLASSES), dtype=np.int64)
        for tree in self.trees:
            counts[np.arange(len(X)), tree.predict(X)] += 1
        return counts

    def predict(self, X):
        return np.argmax(self.votes(X), axis=1)

    def state(self):
        return {"trees": [t.state() for t in self.trees], "n_features": self.n_features}

    def load_state(self, s):
        self.n_features = s["n_features"]
        self.trees = [DecisionTree.from_state(t, self.n_features) for t in s["trees"]]


_CLASSES = {
    "knn": KNearestNeighbors,
    "logistic_regression": LogisticRegression,
    "random_forest": RandomForest,
    "linear_svm": LinearSVM,
}


def fit_baseline(spec: BaselineSpec, X, y) -> Classifier:
    return _CLASSES[spec.kind](spec).fit(X, y)


def predict_baseline(classifier: Classifier, X) -> np.ndarray:
    return classifier.predict(X)


def classifier_from_state(spec: BaselineSpec, state: dict) -> Classifier:
    clf = _CLASSES[spec.kind](spec)
    clf.load_state(state)
    return clf
