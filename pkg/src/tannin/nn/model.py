"""Architecture specs, the flat-buffer network, and the four ablation variants."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace

import numpy as np

from ..data import N_FEATURES
from ..preprocess import FeatureOrdering, ScalerParams, apply_ordering, transform
from .layers import EVAL, BatchNorm, Conv1D, Dense, Dropout, Flatten, ReLU, softmax, softmax_cross_entropy, softmax_cross_entropy_backward

VARIANTS = ("DNN-D", "DNN", "1DCNN-D", "1DCNN")
NUM_CLASSES = 10


@dataclass(frozen=True)
class ConvSpec:
    num_filters: int = 16
    kernel_width: int = 3
    stride: int = 1


@dataclass(frozen=True)
class ModelSpec:
    variant: str = "1DCNN"
    conv: ConvSpec | None = field(default_factory=ConvSpec)
    dense_sizes: tuple[int, ...] = (64, 64, 32, 16)
    num_classes: int = NUM_CLASSES
    dropout_rate: float = 0.3
    use_batchnorm: bool = True
    seed: int = 0
    n_features: int = N_FEATURES
    n_regularized: int = 3  # dense layers followed by batchnorm + dropout

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.variant.startswith("1DCNN") and self.conv is None:
            raise ValueError(f"{self.variant} needs a conv block")
        if not self.variant.startswith("1DCNN") and self.conv is not None:
            raise ValueError(f"{self.variant} has no conv block")
        if self.variant.endswith("-D") and (self.dropout_rate != 0 or self.use_batchnorm):
            raise ValueError(f"{self.variant} must have dropout_rate=0 and no batchnorm")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must lie in [0, 1)")
        if len(self.dense_sizes) != 4:
            raise ValueError("exactly 4 hidden dense widths are required")
        if self.n_regularized > len(self.dense_sizes):
            raise ValueError("n_regularized exceeds the number of hidden layers")

    @classmethod
    def for_variant(cls, variant: str, seed: int = 0, **overrides) -> "ModelSpec":
        """Default spec for a variant; "-D" strips dropout and batchnorm, 1DCNN adds the conv block."""
        if variant not in VARIANTS:
            raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
        base = {
            "variant": variant,
            "conv": ConvSpec() if variant.startswith("1DCNN") else None,
            "seed": seed,
        }
        if variant.endswith("-D"):
            base.update(dropout_rate=0.0, use_batchnorm=False)
        for key, value in overrides.items():
            if key == "conv" and isinstance(value, dict):
                value = ConvSpec(**value) if base["conv"] is not None else None
            if key in ("dropout_rate", "use_batchnorm") and variant.endswith("-D"):
                continue
            if key == "conv" and not variant.startswith("1DCNN"):
                continue
            if key == "dense_sizes":
                value = tuple(value)
            base[key] = value
        return cls(**base)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["dense_sizes"] = list(self.dense_sizes)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        d = dict(d)
        d["conv"] = ConvSpec(**d["conv"]) if d.get("conv") else None
        d["dense_sizes"] = tuple(d["dense_sizes"])
        return cls(**d)


class Network:
    """A layer stack whose parameters and gradients live in two flat buffers."""

    def __init__(self, layers, rng=None):
        self.layers = list(layers)
        self.slots = []  # (layer index, param name, offset, shape)
        size = 0
        for i, layer in enumerate(self.layers):
            for name, shape in layer.param_shapes.items():
                self.slots.append((i, name, size, shape))
                size += int(np.prod(shape))
        self.theta = np.zeros(size)
        self.grad = np.zeros(size)
        for i, name, offset, shape in self.slots:
            n = int(np.prod(shape))
            self.layers[i].params[name] = self.theta[offset : offset + n].reshape(shape)
            self.layers[i].grads[name] = self.grad[offset : offset + n].reshape(shape)
        if rng is not None:
            for layer in self.layers:
                layer.init_params(rng)

    @property
    def batchnorms(self):
        return [l for l in self.layers if isinstance(l, BatchNorm)]

    def count(self, kind) -> int:
        return sum(isinstance(l, kind) for l in self.layers)

    def forward(self, x, mode=EVAL, rng=None):
        for layer in self.layers:
            x = layer.forward(x, mode, rng)
        return x

    def backward(self, grad_logits):
        g = grad_logits
        for layer in reversed(self.layers):
            g = layer.backward(g)
        return g

    def loss_and_grad(self, x, labels, mode, rng=None):
        """One forward/backward pass; gradients land in `self.grad`."""
        logits = self.forward(x, mode, rng)
        loss, probs = softmax_cross_entropy(logits, labels)
        self.backward(softmax_cross_entropy_backward(probs, labels))
        return loss

    def loss(self, x, labels, mode, rng=None) -> float:
        return softmax_cross_entropy(self.forward(x, mode, rng), labels)[0]

    def named_parameters(self):
        for i, name, offset, shape in self.slots:
            yield f"{i}.{type(self.layers[i]).__name__.lower()}.{name}", self.layers[i].params[name]

    def named_gradients(self):
        for i, name, offset, shape in self.slots:
            yield f"{i}.{type(self.layers[i]).__name__.lower()}.{name}", self.layers[i].grads[name]


def build_network(spec: ModelSpec, rng=None) -> Network:
    layers = []
    width = spec.n_features
    if spec.conv is not None:
        c = spec.conv
        layers += [Conv1D(1, c.num_filters, c.kernel_width, c.stride), ReLU(), Flatten()]
        width = c.num_filters * ((spec.n_features - c.kernel_width) // c.stride + 1)
    for i, size in enumerate(spec.dense_sizes):
        layers.append(Dense(width, size))
        regularized = i < spec.n_regularized
        if regularized and spec.use_batchnorm:
            layers.append(BatchNorm(size))
        layers.append(ReLU())
        if regularized and spec.dropout_rate > 0:
            layers.append(Dropout(spec.dropout_rate))
        width = size
    layers.append(Dense(width, spec.num_classes))
    return Network(layers, rng)


def stream(seed: int, purpose: int) -> np.random.Generator:
    """Independent PCG64 stream per (seed, purpose): 0 = init, 1 = training."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, purpose])))


@dataclass
class TrainedModel:
    spec: ModelSpec
    network: Network
    scaler: ScalerParams | None = None
    ordering: FeatureOrdering | None = None

    def prepare(self, X) -> np.ndarray:
        """Raw features -> network input (scaled, reordered, conv-shaped)."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.spec.n_features:
            raise ValueError(f"expected {self.spec.n_features} features, got shape {X.shape}")
        if self.scaler is not None:
            X = transform(self.scaler, X)
        if self.ordering is not None:
            X = apply_ordering(self.ordering, X)
        if self.spec.conv is not None:
            X = X[:, None, :]
        return X

    @property
    def bn_running_stats(self):
        return [(bn.running_mean, bn.running_var) for bn in self.network.batchnorms]


def build_model(variant: str, seed: int = 0, **overrides) -> TrainedModel:
    spec = ModelSpec.for_variant(variant, seed, **overrides)
    return TrainedModel(spec, build_network(spec, stream(spec.seed, 0)))


def model_from_spec(spec: ModelSpec) -> TrainedModel:
    return TrainedModel(spec, build_network(spec, stream(spec.seed, 0)))


def predict_proba(model: TrainedModel, X) -> np.ndarray:
    return softmax(model.network.forward(model.prepare(X), EVAL))


def predict(model: TrainedModel, X):
    """Eval-mode labels and probability rows; argmax ties go to the smaller class."""
    probs = predict_proba(model, X)
    return np.argmax(probs, axis=1), probs
