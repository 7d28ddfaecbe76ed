"""Forward/backward kernels and the layer objects built on them.

All arrays are float64 numpy arrays.  Shapes: conv inputs are
(batch, channels, length); dense inputs are (batch, features).
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

TRAIN, EVAL = "train", "eval"


def _check_mode(mode):
    if mode not in (TRAIN, EVAL):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")


# ------------------------------------------------------------------ conv1d

def conv1d_output_length(length: int, k: int, stride: int) -> int:
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if k > length:
        raise ValueError(f"kernel width {k} exceeds input length {length}")
    return (length - k) // stride + 1


def _windows(x, k, stride):
    # (batch, c_in, L_out, k) view, no copy
    return sliding_window_view(x, k, axis=2)[:, :, ::stride, :]


def conv1d_forward(x, kernels, bias, stride: int = 1):
    """Valid cross-correlation (no kernel flip, no padding)."""
    x = np.asarray(x, dtype=float)
    kernels = np.asarray(kernels, dtype=float)
    if x.ndim != 3 or kernels.ndim != 3 or x.shape[1] != kernels.shape[1]:
        raise ValueError(f"incompatible shapes input {x.shape}, kernels {kernels.shape}")
    conv1d_output_length(x.shape[2], kernels.shape[2], stride)
    cols = _windows(x, kernels.shape[2], stride)
    out = np.einsum("bclk,ock->bol", cols, kernels, optimize=True)
    return out + np.asarray(bias, dtype=float)[None, :, None]


def conv1d_backward(grad, x, kernels, stride: int = 1):
    """Returns (d_input, d_kernels, d_bias)."""
    k = kernels.shape[2]
    l_out = grad.shape[2]
    cols = _windows(x, k, stride)
    d_kernels = np.einsum("bol,bclk->ock", grad, cols, optimize=True)
    d_bias = grad.sum(axis=(0, 2))
    dx = np.zeros_like(x)
    span = stride * (l_out - 1) + 1
    for j in range(k):
        dx[:, :, j : j + span : stride] += np.einsum("bol,oc->bcl", grad, kernels[:, :, j])
    return dx, d_kernels, d_bias


# ------------------------------------------------------------------- dense

def dense_forward(x, weights, bias):
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or weights.ndim != 2 or x.shape[1] != weights.shape[1] or bias.shape != (weights.shape[0],):
        raise ValueError(f"shape mismatch: input {x.shape}, weights {weights.shape}, bias {np.shape(bias)}")
    return x @ weights.T + bias


def dense_backward(grad, x, weights):
    return grad @ weights, grad.T @ x, grad.sum(axis=0)


# --------------------------------------------------------------- batchnorm

def batchnorm_forward(x, gamma, beta, mode, running_mean, running_var, momentum=0.1, epsilon=1e-5):
    """Normalize over the batch axis.

    In train mode `running_mean`/`running_var` are updated in place:
    running <- (1 - momentum) * running + momentum * batch_stat (unbiased variance).
    Returns (output, cache) where cache feeds `batchnorm_backward`.
    """
    _check_mode(mode)
    if mode == TRAIN:
        n = x.shape[0]
        if n < 2:
            raise ValueError("batchnorm in train mode needs a batch of at least 2")
        mu = x.mean(axis=0)
        centered = x - mu
        var = (centered * centered).mean(axis=0)
        running_mean *= 1.0 - momentum
        running_mean += momentum * mu
        running_var *= 1.0 - momentum
        running_var += momentum * var * (n / (n - 1))
    else:
        centered = x - running_mean
        var = running_var
    inv_std = 1.0 / np.sqrt(var + epsilon)
    x_hat = centered * inv_std
    return gamma * x_hat + beta, (x_hat, inv_std, gamma, mode)


def batchnorm_backward(grad, cache):
    """Returns (d_input, d_gamma, d_beta)."""
    x_hat, inv_std, gamma, mode = cache
    d_gamma = (grad * x_hat).sum(axis=0)
    d_beta = grad.sum(axis=0)
    g = grad * gamma
    if mode == EVAL:
        return g * inv_std, d_gamma, d_beta
    n = grad.shape[0]
    dx = inv_std / n * (n * g - g.sum(axis=0) - x_hat * (g * x_hat).sum(axis=0))
    return dx, d_gamma, d_beta


# ----------------------------------------------------------------- dropout

def dropout_forward(x, rate, mode, rng=None):
    """Inverted dropout. Returns (output, mask); mask is None when inactive."""
    _check_mode(mode)
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must lie in [0, 1), got {rate}")
    if mode == EVAL or rate == 0.0:
        return x, None
    if rng is None:
        raise ValueError("train-mode dropout needs an rng")
    mask = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return x * mask, mask


def dropout_backward(grad, mask):
    return grad if mask is None else grad * mask


# ------------------------------------------------------------- loss / misc

def softmax(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_cross_entropy(logits, labels):
    """Mean categorical cross-entropy. Returns (loss, probabilities)."""
    logits = np.asarray(logits, dtype=float)
    labels = np.asarray(labels)
    n, k = logits.shape
    if labels.shape != (n,):
        raise ValueError(f"expected {n} labels, got shape {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= k):
        raise ValueError(f"labels must lie in [0, {k})")
    z = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1))
    log_p = z - log_norm[:, None]
    loss = -log_p[np.arange(n), labels].mean()
    return float(loss), np.exp(log_p)


def softmax_cross_entropy_backward(probs, labels):
    g = probs.copy()
    g[np.arange(len(labels)), labels] -= 1.0
    return g / len(labels)


# ------------------------------------------------------------------ layers

class Layer:
    """Base: `param_shapes` declares parameters; the network binds views into
    its flat parameter/gradient buffers to `self.params` / `self.grads`."""

    param_shapes: dict = {}

    def __init__(self):
        self.params = {}
        self.grads = {}
        self._cache = None

    def init_params(self, rng):
        pass

    def forward(self, x, mode, rng=None):
        raise NotImplementedError

    def backward(self, grad):
        raise NotImplementedError

    def _need_cache(self):
        if self._cache is None:
            raise RuntimeError(f"{type(self).__name__}.backward called without a preceding forward pass")
        return self._cache


def he_uniform(rng, shape, fan_in):
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape)


class Conv1D(Layer):
    kind = "conv1d"

    def __init__(self, in_channels, num_filters, kernel_width, stride=1):
        super().__init__()
        self.in_channels, self.num_filters = in_channels, num_filters
        self.kernel_width, self.stride = kernel_width, stride
        self.param_shapes = {"kernels": (num_filters, in_channels, kernel_width), "bias": (num_filters,)}

    def init_params(self, rng):
        fan_in = self.in_channels * self.kernel_width
        self.params["kernels"][...] = he_uniform(rng, self.param_shapes["kernels"], fan_in)
        self.params["bias"][...] = 0.0

    def forward(self, x, mode, rng=None):
        self._cache = x
        return conv1d_forward(x, self.params["kernels"], self.params["bias"], self.stride)

    def backward(self, grad):
        x = self._need_cache()
        dx, dk, db = conv1d_backward(grad, x, self.params["kernels"], self.stride)
        self.grads["kernels"][...] = dk
        self.grads["bias"][...] = db
        return dx


class Dense(Layer):
    kind = "dense"

    def __init__(self, n_in, n_out):
        super().__init__()
        self.n_in, self.n_out = n_in, n_out
        self.param_shapes = {"weights": (n_out, n_in), "bias": (n_out,)}

    def init_params(self, rng):
        self.params["weights"][...] = he_uniform(rng, (self.n_out, self.n_in), self.n_in)
        self.params["bias"][...] = 0.0

    def forward(self, x, mode, rng=None):
        self._cache = x
        return x @ self.params["weights"].T + self.params["bias"]

    def backward(self, grad):
        x = self._need_cache()
        dx, dw, db = dense_backward(grad, x, self.params["weights"])
        self.grads["weights"][...] = dw
        self.grads["bias"][...] = db
        return dx


class BatchNorm(Layer):
    kind = "batchnorm"

    def __init__(self, n_units, momentum=0.1, epsilon=1e-5):
        super().__init__()
        self.n_units, self.momentum, self.epsilon = n_units, momentum, epsilon
        self.param_shapes = {"gamma": (n_units,), "beta": (n_units,)}
        self.running_mean = np.zeros(n_units)
        self.running_var = np.ones(n_units)

    def init_params(self, rng):
        self.params["gamma"][...] = 1.0
        self.params["beta"][...] = 0.0

    def forward(self, x, mode, rng=None):
        out, self._cache = batchnorm_forward(
            x, self.params["gamma"], self.params["beta"], mode,
            self.running_mean, self.running_var, self.momentum, self.epsilon,
        )
        return out

    def backward(self, grad):
        dx, dg, db = batchnorm_backward(grad, self._need_cache())
        self.grads["gamma"][...] = dg
        self.grads["beta"][...] = db
        return dx


class ReLU(Layer):
    kind = "relu"

    def forward(self, x, mode, rng=None):
        active = x > 0
        self._cache = active
        return x * active

    def backward(self, grad):
        return grad * self._need_cache()


class Dropout(Layer):
    kind = "dropout"

    def __init__(self, rate):
        super().__init__()
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"dropout rate must lie in [0, 1), got {rate}")
        self.rate = rate

    def forward(self, x, mode, rng=None):
        out, mask = dropout_forward(x, self.rate, mode, rng)
        self._cache = (mask,)
        return out

    def backward(self, grad):
        (mask,) = self._need_cache()
        return dropout_backward(grad, mask)


class Flatten(Layer):
    kind = "flatten"

    def forward(self, x, mode, rng=None):
        self._cache = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad):
        return grad.reshape(self._need_cache())
