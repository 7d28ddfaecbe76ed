"""Experiment configuration: one YAML (or JSON) file plus command-line overrides.

Schema (every key optional except ``seed``)::

    seed: 42                   # global seed; required
    data: path/to/winequality-red.csv
    out: runs/default
    variant: 1DCNN             # model trained by `tannin train`
    seeds: 1                   # runs per variant for `tannin ablate`
    jobs: 1                    # >1 trains independent models in worker processes
    split: {test_fraction: 0.2, stratified: true}
    model: {dense_sizes: [64, 64, 32, 16], dropout_rate: 0.3,
            conv: {num_filters: 16, kernel_width: 3, stride: 1}}
    train: {epochs: 150, batch_size: 32, learning_rate: 0.001,
            optimizer: adam, shuffle: true}
    baselines:
      knn: {k: 5}
      logistic_regression: {l2: 0.0001, learning_rate: 0.5, epochs: 500}
      random_forest: {n_trees: 200, max_depth: 12, min_leaf: 2}
      linear_svm: {C: 1.0, learning_rate: 0.05, epochs: 500}
"""

from __future__ import annotations

import zlib
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from .baselines import KINDS, BaselineSpec
from .data import SplitSpec, resolve_data_path
from .nn.model import VARIANTS, ModelSpec
from .nn.train import TrainConfig


class ConfigError(ValueError):
    pass


MODEL_KEYS = {"conv", "dense_sizes", "dropout_rate", "use_batchnorm", "n_regularized"}
TRAIN_KEYS = {"epochs", "batch_size", "learning_rate", "optimizer", "shuffle", "beta1", "beta2", "adam_eps"}
SPLIT_KEYS = {"test_fraction", "stratified"}
TOP_KEYS = {"seed", "data", "out", "variant", "seeds", "jobs", "split", "model", "train", "baselines"}


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    data: str | None = None
    out: str = "runs/default"
    variant: str = "1DCNN"
    seeds: int = 1
    jobs: int = 1
    split: dict = field(default_factory=dict)
    model: dict = field(default_factory=dict)
    train: dict = field(default_factory=dict)
    baselines: dict = field(default_factory=dict)

    def split_spec(self) -> SplitSpec:
        s = {"test_fraction": 0.2, "stratified": True, **self.split}
        return SplitSpec(s["test_fraction"], self.seed, s["stratified"])

    def model_spec(self, variant: str, seed: int) -> ModelSpec:
        return ModelSpec.for_variant(variant, seed, **self.model)

    def train_config(self, seed: int) -> TrainConfig:
        return TrainConfig(seed=seed, **self.train)

    def baseline_spec(self, kind: str, seed: int) -> BaselineSpec:
        return BaselineSpec(kind, dict(self.baselines.get(kind, {})), seed)

    def data_path(self) -> Path:
        return resolve_data_path(self.data)

    def snapshot(self) -> dict:
        """Fully resolved settings, as recorded in manifests.  `out` and `jobs`
        are left out: neither affects any result."""
        d = asdict(self)
        del d["out"], d["jobs"]
        d["data"] = str(self.data_path())
        d["split"] = {"test_fraction": self.split_spec().test_fraction, "stratified": self.split_spec().stratified}
        d["train"] = {k: v for k, v in self.train_config(0).to_dict().items() if k != "seed"}
        d["baselines"] = {k: self.baseline_spec(k, 0).resolved() for k in KINDS}
        return d


def derive_seed(seed: int, name: str, run: int = 0) -> int:
    """Per-model seed from (global seed, model name, run index); order-independent."""
    ss = np.random.SeedSequence([seed, zlib.crc32(name.encode()), run])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def _check_keys(section, allowed, where):
    if not isinstance(section, dict):
        raise ConfigError(f"{where} must be a mapping")
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {sorted(unknown)}")


def build_config(raw: dict | None = None, **overrides) -> ExperimentConfig:
    """Merge file contents with non-None overrides and validate."""
    raw = dict(raw or {})
    _check_keys(raw, TOP_KEYS, "config")
    for k, v in overrides.items():
        if v is not None:
            raw[k] = v
    if raw.get("seed") is None:
        raise ConfigError("config must set 'seed' (or pass --seed)")
    seed = raw["seed"]
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError(f"seed must be a non-negative integer, got {seed!r}")
    for section, keys in (("split", SPLIT_KEYS), ("model", MODEL_KEYS), ("train", TRAIN_KEYS)):
        _check_keys(raw.get(section, {}), keys, section)
    _check_keys(raw.get("baselines", {}), set(KINDS), "baselines")
    if raw.get("variant", "1DCNN") not in VARIANTS:
        raise ConfigError(f"variant must be one of {VARIANTS}")
    for key in ("seeds", "jobs"):
        if not isinstance(raw.get(key, 1), int) or raw.get(key, 1) < 1:
            raise ConfigError(f"{key} must be an integer >= 1")
    if raw.get("data") is not None:
        raw["data"] = str(raw["data"])
    if raw.get("out") is not None:
        raw["out"] = str(raw["out"])
    cfg = ExperimentConfig(**raw)
    # instantiate every spec once so bad values fail at validation time
    try:
        cfg.split_spec()
        cfg.train_config(0)
        for v in VARIANTS:
            cfg.model_spec(v, 0)
        for kind in KINDS:
            cfg.baseline_spec(kind, 0)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def load_config(path=None, **overrides) -> ExperimentConfig:
    raw = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                raw = yaml.safe_load(fh) or {}
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse config {path}: {exc}") from exc
        if raw.get("data") is not None and not Path(raw["data"]).is_absolute():
            raw["data"] = str((Path(path).parent / raw["data"]).resolve())
    return build_config(raw, **overrides)


CONFIG_FIELDS = [f.name for f in fields(ExperimentConfig)]
