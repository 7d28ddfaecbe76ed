"""Loading, validating, serializing and splitting the UCI wine-quality CSV."""

from __future__ import annotations

import math
import os
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

FEATURE_NAMES = (
    "fixed acidity",
    "volatile acidity",
    "citric acid",
    "residual sugar",
    "chlorides",
    "free sulfur dioxide",
    "total sulfur dioxide",
    "density",
    "pH",
    "sulphates",
    "alcohol",
)
LABEL_NAME = "quality"
N_FEATURES = len(FEATURE_NAMES)
MIN_QUALITY, MAX_QUALITY = 0, 10
DATA_ENV_VAR = "TANNIN_DATA"
DEFAULT_DATA = Path(__file__).resolve().parents[2] / "data" / "winequality-red.csv"


class DataError(ValueError):
    """Raised for unreadable or malformed datasets."""


@dataclass(frozen=True)
class WineSample:
    features: tuple[float, ...]
    quality: int

    def __post_init__(self):
        if len(self.features) != N_FEATURES:
            raise DataError(f"expected {N_FEATURES} features, got {len(self.features)}")
        if not all(math.isfinite(v) for v in self.features):
            raise DataError("features must be finite")
        if not MIN_QUALITY <= self.quality <= MAX_QUALITY:
            raise DataError(f"quality {self.quality} outside [{MIN_QUALITY}, {MAX_QUALITY}]")


@dataclass(frozen=True)
class Dataset:
    column_names: tuple[str, ...]
    samples: tuple[WineSample, ...]
    source_path: str = ""

    def __post_init__(self):
        if len(self.column_names) != N_FEATURES + 1 or self.column_names[-1] != LABEL_NAME:
            raise DataError(f"column_names must be 12 names ending in {LABEL_NAME!r}")

    def __len__(self):
        return len(self.samples)

    @property
    def feature_names(self) -> tuple[str, ...]:
        return self.column_names[:-1]

    @property
    def X(self) -> np.ndarray:
        """Feature matrix, shape (n, 11)."""
        if not self.samples:
            return np.empty((0, N_FEATURES))
        return np.array([s.features for s in self.samples], dtype=float)

    @property
    def y(self) -> np.ndarray:
        return np.array([s.quality for s in self.samples], dtype=np.int64)

    def subset(self, indices) -> "Dataset":
        return Dataset(self.column_names, tuple(self.samples[i] for i in indices), self.source_path)

    @classmethod
    def from_arrays(cls, X, y, column_names=None, source_path="") -> "Dataset":
        names = tuple(column_names) if column_names is not None else FEATURE_NAMES + (LABEL_NAME,)
        samples = tuple(
            WineSample(tuple(float(v) for v in row), int(label)) for row, label in zip(X, y)
        )
        return cls(names, samples, source_path)


@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float = 0.2
    seed: int = 42
    stratified: bool = True

    def __post_init__(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError(f"test_fraction must lie in (0, 1), got {self.test_fraction}")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


def resolve_data_path(path: str | os.PathLike | None = None) -> Path:
    """Explicit path, else $TANNIN_DATA, else the bundled red-wine file."""
    if path:
        return Path(path)
    env = os.environ.get(DATA_ENV_VAR)
    if env:
        return Path(env)
    return DEFAULT_DATA


def _parse_number(text: str, lineno: int, column: str) -> float:
    text = text.strip()
    # only '.' is a decimal separator; float() would also accept '1_0', 'nan', 'inf'
    if not text or "_" in text or "," in text:
        raise DataError(f"line {lineno}: non-numeric value {text!r} in column {column!r}")
    try:
        value = float(text)
    except ValueError:
        raise DataError(f"line {lineno}: non-numeric value {text!r} in column {column!r}") from None
    if not math.isfinite(value):
        raise DataError(f"line {lineno}: non-finite value {text!r} in column {column!r}")
    return value


def load_dataset(path) -> Dataset:
    """Read a semicolon-delimited wine-quality CSV, preserving row order."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"data file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise DataError(f"{path}: empty file (missing header)")

    header = [name.strip().strip('"').strip() for name in lines[0].split(";")]
    if len(header) != N_FEATURES + 1:
        raise DataError(f"line 1: expected 12 columns in header, got {len(header)}")
    if header[-1] != LABEL_NAME:
        raise DataError(f"line 1: last column must be {LABEL_NAME!r}, got {header[-1]!r}")

    samples = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split(";")
        if len(fields) != N_FEATURES + 1:
            raise DataError(f"line {lineno}: expected 12 fields, got {len(fields)}")
        values = [_parse_number(f, lineno, header[j]) for j, f in enumerate(fields)]
        quality = values[-1]
        if quality != int(quality) or not MIN_QUALITY <= quality <= MAX_QUALITY:
            raise DataError(f"line {lineno}: quality {fields[-1].strip()!r} is not an integer in [0, 10]")
        samples.append(WineSample(tuple(values[:-1]), int(quality)))
    return Dataset(tuple(header), tuple(samples), str(path))


def write_dataset(dataset: Dataset, path) -> None:
    """Write in the UCI layout; repr() keeps floats round-trippable."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(";".join(f'"{name}"' for name in dataset.column_names) + "\n")
        for s in dataset.samples:
            fh.write(";".join([repr(v) for v in s.features] + [str(s.quality)]) + "\n")


def _stratified_test_counts(class_sizes: dict[int, int], n_test: int, test_fraction: float) -> dict[int, int]:
    # floor of the exact share, then hand out the remainder by largest fractional part
    exact = {c: test_fraction * n for c, n in class_sizes.items()}
    counts = {c: math.floor(v) for c, v in exact.items()}
    remaining = n_test - sum(counts.values())
    order = sorted(class_sizes, key=lambda c: (-(exact[c] - counts[c]), c))
    for c in order[:remaining]:
        counts[c] += 1
    return counts


def split(dataset: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Deterministic train/test partition; |test| = round(test_fraction * N)."""
    n = len(dataset)
    if n == 0:
        raise DataError("cannot split an empty dataset")
    # round half up so 0.5 * 5 gives 3, independent of banker's rounding
    n_test = int(math.floor(spec.test_fraction * n + 0.5))
    if n_test == 0 or n_test == n:
        raise DataError(f"test_fraction={spec.test_fraction} leaves an empty partition for N={n}")

    rng = np.random.default_rng(spec.seed)
    if spec.stratified:
        by_class: dict[int, list[int]] = defaultdict(list)
        for i, s in enumerate(dataset.samples):
            by_class[s.quality].append(i)
        counts = _stratified_test_counts({c: len(v) for c, v in by_class.items()}, n_test, spec.test_fraction)
        test_idx = []
        for c in sorted(by_class):
            members = np.array(by_class[c])
            test_idx.extend(rng.permutation(members)[: counts[c]].tolist())
    else:
        test_idx = rng.permutation(n)[:n_test].tolist()

    test_set = set(test_idx)
    train_idx = [i for i in range(n) if i not in test_set]
    test_idx = sorted(test_set)
    return dataset.subset(train_idx), dataset.subset(test_idx)


def majority_rate(labels) -> float:
    """Accuracy of always predicting the most frequent label."""
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ValueError("no labels")
    return float(np.bincount(labels).max() / labels.size)
