"""Central finite-difference oracle, independent of the analytic backward path."""

import numpy as np

from tannin.nn.layers import ReLU

STEP = 1e-3
NORM_FLOOR = 1e-6  # a gradient tensor smaller than this counts as zero


def tensor_rel_error(analytic, numeric) -> float:
    a, n = np.ravel(analytic), np.ravel(numeric)
    return float(np.linalg.norm(a - n) / max(np.linalg.norm(a), np.linalg.norm(n), NORM_FLOOR))


def numeric_grad(f, x, h=STEP, indices=None):
    """d f / d x at the given flat indices (all if None); x is perturbed in place and restored."""
    flat = x.reshape(-1)
    idx = range(flat.size) if indices is None else indices
    out = []
    for i in idx:
        old = flat[i]
        flat[i] = old + h
        fp = f()
        flat[i] = old - h
        fm = f()
        flat[i] = old
        out.append((fp - fm) / (2 * h))
    return np.array(out)


def _gates(net):
    return [l._cache.copy() for l in net.layers if isinstance(l, ReLU)]


def check_network(net, x, labels, mode, mask_seed=99, per_tensor=None, rng=None, h=STEP):
    """Compare net.grad with finite differences of net.loss.

    Dropout draws from a fresh generator seeded with `mask_seed` on every
    evaluation, so the mask is fixed.  Coordinates whose +-h step flips a ReLU
    gate are skipped.  Returns ({tensor name: rel error}, skipped, checked).
    """
    f = lambda: net.loss(x, labels, mode, np.random.default_rng(mask_seed))
    net.loss_and_grad(x, labels, mode, np.random.default_rng(mask_seed))
    analytic = net.grad.copy()
    base = _gates(net)
    errors, skipped, checked = {}, 0, 0
    for (name, _), (i, pname, offset, shape) in zip(net.named_parameters(), net.slots):
        size = int(np.prod(shape))
        local = np.arange(size)
        if per_tensor is not None and size > per_tensor:
            local = np.sort(rng.choice(size, per_tensor, replace=False))
        a, n = [], []
        for k in offset + local:
            old = net.theta[k]
            net.theta[k] = old + h
            fp = f()
            flipped = any((g != b).any() for g, b in zip(_gates(net), base))
            net.theta[k] = old - h
            fm = f()
            flipped = flipped or any((g != b).any() for g, b in zip(_gates(net), base))
            net.theta[k] = old
            checked += 1
            if flipped:
                skipped += 1
                continue
            a.append(analytic[k])
            n.append((fp - fm) / (2 * h))
        errors[name] = tensor_rel_error(np.array(a), np.array(n))
    return errors, skipped, checked


def randomize(net, rng, scale=0.1):
    """Move parameters off their symmetric initial values (gamma=1, zero biases)."""
    net.theta += rng.normal(scale=scale, size=net.theta.size)
    for bn in net.batchnorms:
        bn.running_mean[...] = rng.normal(scale=0.1, size=bn.n_units)
        bn.running_var[...] = rng.uniform(0.5, 2.0, size=bn.n_units)
