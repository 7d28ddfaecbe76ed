"""Versioned JSON checkpoints for networks and baseline classifiers.

Arrays are stored as decimal lists; Python's float repr round-trips exactly,
so a reloaded model reproduces predictions bit for bit.
"""

from __future__ import annotations

import json

import numpy as np

from .baselines import BaselineSpec, Classifier, classifier_from_state
from .nn.model import ModelSpec, TrainedModel, build_network
from .preprocess import FeatureOrdering, ScalerParams

FORMAT = "tannin-checkpoint"
VERSION = 1


def _scaler_dict(scaler):
    return scaler.to_dict() if scaler is not None else None


def model_to_dict(model: TrainedModel) -> dict:
    return {
        "format": FORMAT,
        "version": VERSION,
        "kind": "network",
        "spec": model.spec.to_dict(),
        "parameters": [
            {"name": name, "shape": list(p.shape), "data": p.ravel().tolist()}
            for name, p in model.network.named_parameters()
        ],
        "bn_running_stats": [
            {"mean": m.tolist(), "var": v.tolist()} for m, v in model.bn_running_stats
        ],
        "scaler": _scaler_dict(model.scaler),
        "ordering": model.ordering.to_dict() if model.ordering is not None else None,
    }


def _check_header(d, kind):
    if d.get("format") != FORMAT:
        raise ValueError(f"not a {FORMAT} file")
    if d.get("version") != VERSION:
        raise ValueError(f"unsupported checkpoint version {d.get('version')!r}")
    if d.get("kind") != kind:
        raise ValueError(f"expected a {kind} checkpoint, found {d.get('kind')!r}")


def model_from_dict(d: dict) -> TrainedModel:
    _check_header(d, "network")
    spec = ModelSpec.from_dict(d["spec"])
    net = build_network(spec)
    stored = d["parameters"]
    named = list(net.named_parameters())
    if [p["name"] for p in stored] != [n for n, _ in named]:
        raise ValueError("checkpoint parameters do not match the architecture")
    for entry, (_, target) in zip(stored, named):
        if list(target.shape) != entry["shape"]:
            raise ValueError(f"shape mismatch for {entry['name']}")
        target[...] = np.array(entry["data"], dtype=float).reshape(target.shape)
    bns = net.batchnorms
    if len(bns) != len(d["bn_running_stats"]):
        raise ValueError("batchnorm statistics do not match the architecture")
    for bn, stats in zip(bns, d["bn_running_stats"]):
        bn.running_mean[...] = stats["mean"]
        bn.running_var[...] = stats["var"]
    scaler = ScalerParams.from_dict(d["scaler"]) if d.get("scaler") else None
    ordering = FeatureOrdering.from_dict(d["ordering"]) if d.get("ordering") else None
    return TrainedModel(spec, net, scaler, ordering)


def classifier_to_dict(clf: Classifier, scaler: ScalerParams | None = None) -> dict:
    return {
        "format": FORMAT,
        "version": VERSION,
        "kind": "baseline",
        "spec": clf.spec.to_dict(),
        "state": clf.state(),
        "scaler": _scaler_dict(scaler),
    }


def classifier_from_dict(d: dict):
    """Returns (classifier, scaler or None)."""
    _check_header(d, "baseline")
    s = d["spec"]
    spec = BaselineSpec(s["kind"], s["hyperparameters"], s["seed"])
    scaler = ScalerParams.from_dict(d["scaler"]) if d.get("scaler") else None
    return classifier_from_state(spec, d["state"]), scaler


def save(obj: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh)
        fh.write("\n")


def load(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
