"""Experiment drivers behind the CLI.  Each run is a function of
(config, dataset file); wall-clock timings go to a separate timings.json
so manifest.json stays byte-identical across reruns."""

from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import DISPLAY_NAMES, KINDS, fit_baseline
from .checkpoint import model_to_dict, save
from .config import ExperimentConfig, derive_seed
from .data import Dataset, load_dataset, majority_rate, split
from .metrics import AVERAGING, evaluate, format_table
from .nn.model import VARIANTS, model_from_spec, predict
from .nn.train import train, write_history_csv
from .preprocess import fit_scaler, reorder_features, transform
from .stats import correlation_matrix, heatmap_svg, pca, shapiro_wilk, write_correlation_csv

MANIFEST_VERSION = 1
COMPARE_ROWS = ("kNN", "SVM", "LR", "RF", "1DCNN")
BASELINE_FOR_ROW = {v: k for k, v in DISPLAY_NAMES.items()}


class ExperimentError(RuntimeError):
    """A model failed to train or evaluate; the message names it."""


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


@dataclass
class Prepared:
    """A split plus the train-only scaler and feature ordering shared by every model."""

    dataset: Dataset
    train: Dataset
    test: Dataset
    scaler: object
    ordering: object

    def dataset_record(self) -> dict:
        return {
            "path": self.dataset.source_path,
            "sha256": _sha256(self.dataset.source_path),
            "n_samples": len(self.dataset),
            "n_train": len(self.train),
            "n_test": len(self.test),
            "test_majority_rate": majority_rate(self.test.y),
        }

    def ordering_names(self) -> list[str]:
        return self.ordering.names(self.dataset.feature_names)


def prepare(cfg: ExperimentConfig) -> Prepared:
    dataset = load_dataset(cfg.data_path())
    train_ds, test_ds = split(dataset, cfg.split_spec())
    scaler = fit_scaler(train_ds)
    ordering = reorder_features(correlation_matrix(train_ds, include_label=False))
    return Prepared(dataset, train_ds, test_ds, scaler, ordering)


def _manifest(cfg, command, prep, models, extra=None) -> dict:
    m = {
        "manifest_version": MANIFEST_VERSION,
        "command": command,
        "library_version": __version__,
        "config": cfg.snapshot(),
        "dataset": prep.dataset_record(),
        "feature_ordering": prep.ordering_names(),
        "averaging": AVERAGING,
        "models": models,
    }
    if extra:
        m.update(extra)
    return m


def _accuracy(y, yp) -> float:
    return float((np.asarray(y) == np.asarray(yp)).mean())


# ------------------------------------------------------------- model jobs

def run_network(cfg: ExperimentConfig, prep: Prepared, variant: str, run: int = 0):
    """Train one variant; returns (record dict, trained model, history)."""
    seed = derive_seed(cfg.seed, variant, run)
    model = model_from_spec(cfg.model_spec(variant, seed))
    model.scaler, model.ordering = prep.scaler, prep.ordering
    try:
        model, history = train(model, prep.train, cfg.train_config(seed))
        train_pred, _ = predict(model, prep.train.X)
        test_pred, _ = predict(model, prep.test.X)
    except Exception as exc:
        raise ExperimentError(f"{variant}: {exc}") from exc
    train_acc = _accuracy(prep.train.y, train_pred)
    test_acc = _accuracy(prep.test.y, test_pred)
    record = {
        "kind": "network",
        "seed": seed,
        "spec": model.spec.to_dict(),
        "final_train_loss": history[-1].loss,
        "train_accuracy": train_acc,
        "test_accuracy": test_acc,
        "generalization_gap": train_acc - test_acc,
        "metrics": evaluate(prep.test.y, test_pred).to_dict(),
    }
    return record, model, history


def run_baseline(cfg: ExperimentConfig, prep: Prepared, kind: str):
    name = DISPLAY_NAMES[kind]
    seed = derive_seed(cfg.seed, name)
    spec = cfg.baseline_spec(kind, seed)
    Xtr, Xte = transform(prep.scaler, prep.train.X), transform(prep.scaler, prep.test.X)
    try:
        clf = fit_baseline(spec, Xtr, prep.train.y)
        train_pred, test_pred = clf.predict(Xtr), clf.predict(Xte)
    except Exception as exc:
        raise ExperimentError(f"{name}: {exc}") from exc
    train_acc = _accuracy(prep.train.y, train_pred)
    test_acc = _accuracy(prep.test.y, test_pred)
    record = {
        "kind": "baseline",
        "seed": seed,
        "spec": spec.to_dict(),
        "train_accuracy": train_acc,
        "test_accuracy": test_acc,
        "generalization_gap": train_acc - test_acc,
        "metrics": evaluate(prep.test.y, test_pred).to_dict(),
    }
    return record, clf


def _job(args):
    cfg, prep, what, name, run = args
    start = time.perf_counter()
    if what == "network":
        record = run_network(cfg, prep, name, run)[0]
    else:
        record = run_baseline(cfg, prep, name)[0]
    return record, time.perf_counter() - start


def _run_jobs(cfg, jobs):
    """Sequential by default; seeds depend only on (seed, name, run), so
    the parallel path gives identical records."""
    if cfg.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            return list(pool.map(_job, jobs))
    return [_job(j) for j in jobs]


# --------------------------------------------------------------- commands

def run_analyze(cfg: ExperimentConfig, out: Path | None = None) -> dict:
    out = Path(out or cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    dataset = load_dataset(cfg.data_path())
    corr = correlation_matrix(dataset, include_label=True)
    write_correlation_csv(corr, out / "correlation.csv")
    (out / "correlation_heatmap.svg").write_text(heatmap_svg(corr), encoding="utf-8")

    result = pca(dataset, standardize=True)
    pca_report = {
        "standardized": True,
        "importance_definition": "sum_k explained_variance_ratio_k * |loading_kj|, normalized to sum 1",
        "importance": [{"feature": n, "importance": v} for n, v in result.ranking()],
        "explained_variance": result.explained_variance.tolist(),
        "explained_variance_ratio": result.explained_variance_ratio.tolist(),
        "components": result.components.tolist(),
        "features": list(result.labels),
    }
    _write_json(pca_report, out / "pca.json")

    alpha = 0.05
    features = []
    for j, name in enumerate(dataset.feature_names):
        r = shapiro_wilk(dataset.X[:, j])
        features.append({"feature": name, "n": r.n, "W": r.w_statistic, "p": r.p_value,
                         "rejects_normality": r.rejects_normality(alpha)})
    shapiro_report = {"alpha": alpha, "method": "Shapiro-Wilk, Royston AS R94", "features": features}
    _write_json(shapiro_report, out / "shapiro.json")

    quality = [(n, corr[n, "quality"]) for n in dataset.feature_names]
    summary = {
        "dataset": {"path": dataset.source_path, "sha256": _sha256(dataset.source_path), "n_samples": len(dataset)},
        "correlation_with_quality": dict(quality),
        "files": ["correlation.csv", "correlation_heatmap.svg", "pca.json", "shapiro.json"],
    }
    _write_json(summary, out / "analysis.json")
    return {"correlation": corr, "pca": pca_report, "shapiro": shapiro_report, "summary": summary}


def run_train(cfg: ExperimentConfig, out: Path | None = None) -> dict:
    out = Path(out or cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    prep = prepare(cfg)
    start = time.perf_counter()
    record, model, history = run_network(cfg, prep, cfg.variant)
    elapsed = time.perf_counter() - start
    save(model_to_dict(model), out / "checkpoint.json")
    write_history_csv(history, out / "history.csv")
    _write_json(record["metrics"], out / "report.json")
    manifest = _manifest(cfg, "train", prep, {cfg.variant: record})
    _write_json(manifest, out / "manifest.json")
    _write_json({cfg.variant: elapsed}, out / "timings.json")
    (out / "table.txt").write_text(format_table([(cfg.variant, record["metrics"])]), encoding="utf-8")
    return {"manifest": manifest, "model": model, "history": history, "prepared": prep}


def run_compare(cfg: ExperimentConfig, out: Path | None = None) -> dict:
    out = Path(out or cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    prep = prepare(cfg)
    jobs = [(cfg, prep, "baseline", BASELINE_FOR_ROW[row], 0) for row in COMPARE_ROWS[:-1]]
    jobs.append((cfg, prep, "network", "1DCNN", 0))
    results = _run_jobs(cfg, jobs)
    models = {row: rec for row, (rec, _) in zip(COMPARE_ROWS, results)}
    table = format_table([(row, models[row]["metrics"]) for row in COMPARE_ROWS])
    manifest = _manifest(cfg, "compare", prep, models, {"rows": list(COMPARE_ROWS)})
    _write_json(manifest, out / "manifest.json")
    _write_json({row: t for row, (_, t) in zip(COMPARE_ROWS, results)}, out / "timings.json")
    (out / "table.txt").write_text(table, encoding="utf-8")
    return {"manifest": manifest, "table": table}


METRIC_KEYS = ("precision", "accuracy", "recall", "f1")


def _aggregate(records) -> dict:
    agg = {}
    for key in METRIC_KEYS:
        vals = np.array([r["metrics"][key] for r in records])
        agg[key] = float(vals.mean())
        agg[key + "_std"] = float(vals.std(ddof=1)) if len(vals) > 1 else 0.0
    for key in ("train_accuracy", "test_accuracy", "generalization_gap"):
        vals = np.array([r[key] for r in records])
        agg[key] = float(vals.mean())
        agg[key + "_std"] = float(vals.std(ddof=1)) if len(vals) > 1 else 0.0
    return agg


def run_ablate(cfg: ExperimentConfig, out: Path | None = None) -> dict:
    out = Path(out or cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    prep = prepare(cfg)
    jobs = [(cfg, prep, "network", v, r) for v in VARIANTS for r in range(cfg.seeds)]
    results = _run_jobs(cfg, jobs)
    models, timings = {}, {}
    for i, v in enumerate(VARIANTS):
        chunk = results[i * cfg.seeds : (i + 1) * cfg.seeds]
        runs = [rec for rec, _ in chunk]
        models[v] = {"dropout_rate": runs[0]["spec"]["dropout_rate"],
                     "use_batchnorm": runs[0]["spec"]["use_batchnorm"],
                     "summary": _aggregate(runs), "runs": runs}
        timings[v] = [t for _, t in chunk]

    if cfg.seeds == 1:
        rows = [(v, {**models[v]["summary"], "gap": models[v]["summary"]["generalization_gap"]}) for v in VARIANTS]
        table = format_table(rows, extra_columns=[("Gap", "gap")])
    else:
        rows = []
        for v in VARIANTS:
            s = models[v]["summary"]
            cells = {k: s[k] for k in METRIC_KEYS}
            for k in METRIC_KEYS + ("generalization_gap",):
                cells[k + "_pm"] = f"{s[k]:.3f} ± {s[k + '_std']:.3f}"
            rows.append((v, cells))
        table = _pm_table(rows)
    manifest = _manifest(cfg, "ablate", prep, models, {"rows": list(VARIANTS), "seeds": cfg.seeds})
    _write_json(manifest, out / "manifest.json")
    _write_json(timings, out / "timings.json")
    (out / "table.txt").write_text(table, encoding="utf-8")
    return {"manifest": manifest, "table": table}


def _pm_table(rows) -> str:
    headers = ["Model", "Precision", "Accuracy", "Recall", "F1-Score", "Gap"]
    keys = [k + "_pm" for k in METRIC_KEYS + ("generalization_gap",)]
    body = [[name] + [cells[k] for k in keys] for name, cells in rows]
    widths = [max(len(r[i]) for r in [headers, *body]) for i in range(len(headers))]
    fmt = lambda r: "  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths)))
    return "\n".join([fmt(headers), "-" * len(fmt(headers)), *map(fmt, body)]) + "\n"
