"""Feature statistics: Pearson correlation, PCA importance, Shapiro-Wilk."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .data import Dataset

_NORMAL = NormalDist()


@dataclass(frozen=True)
class CorrelationMatrix:
    labels: tuple[str, ...]
    values: np.ndarray

    def __getitem__(self, key):
        i, j = (self.labels.index(k) if isinstance(k, str) else k for k in key)
        return float(self.values[i, j])

    def without(self, label: str) -> "CorrelationMatrix":
        keep = [i for i, name in enumerate(self.labels) if name != label]
        return CorrelationMatrix(tuple(self.labels[i] for i in keep), self.values[np.ix_(keep, keep)])


@dataclass(frozen=True)
class PcaResult:
    labels: tuple[str, ...]
    components: np.ndarray          # rows are unit principal directions
    explained_variance: np.ndarray  # non-increasing
    importance: np.ndarray          # per feature, sums to 1
    mean: np.ndarray
    scale: np.ndarray

    @property
    def explained_variance_ratio(self) -> np.ndarray:
        total = self.explained_variance.sum()
        if total == 0:
            return np.zeros_like(self.explained_variance)
        return self.explained_variance / total

    def ranking(self) -> list[tuple[str, float]]:
        order = sorted(range(len(self.labels)), key=lambda j: (-self.importance[j], j))
        return [(self.labels[j], float(self.importance[j])) for j in order]


@dataclass(frozen=True)
class ShapiroResult:
    w_statistic: float
    p_value: float
    n: int

    def rejects_normality(self, alpha: float = 0.05) -> bool:
        return self.p_value < alpha


# ---------------------------------------------------------------- correlation

def pearson(x, y) -> float:
    """Pearson correlation with sample (n-1) moments, clamped to [-1, 1]."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    n = x.size
    if n < 2:
        raise ValueError("need at least 2 observations")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = math.sqrt(dx @ dx / (n - 1))
    sy = math.sqrt(dy @ dy / (n - 1))
    if sx == 0.0 or sy == 0.0:
        raise ValueError("correlation undefined for a zero-variance input")
    rho = (dx @ dy / (n - 1)) / (sx * sy)
    return min(1.0, max(-1.0, rho))


def correlation_matrix(dataset: Dataset, include_label: bool = True) -> CorrelationMatrix:
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    cols = dataset.X
    labels = list(dataset.feature_names)
    if include_label:
        cols = np.column_stack([cols, dataset.y.astype(float)])
        labels.append(dataset.column_names[-1])
    return correlation_from_columns(cols, labels)


def correlation_from_columns(cols: np.ndarray, labels) -> CorrelationMatrix:
    cols = np.asarray(cols, dtype=float)
    n, d = cols.shape
    centered = cols - cols.mean(axis=0)
    sd = np.sqrt((centered**2).sum(axis=0) / (n - 1))
    for j in range(d):
        if sd[j] == 0.0:
            raise ValueError(f"column {labels[j]!r} has zero variance")
    z = centered / sd
    values = np.clip(z.T @ z / (n - 1), -1.0, 1.0)
    values = (values + values.T) / 2
    np.fill_diagonal(values, 1.0)
    return CorrelationMatrix(tuple(labels), values)


def write_correlation_csv(corr: CorrelationMatrix, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([""] + list(corr.labels))
        for name, row in zip(corr.labels, corr.values):
            w.writerow([name] + [repr(float(v)) for v in row])


def read_correlation_csv(path) -> CorrelationMatrix:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    labels = tuple(rows[0][1:])
    values = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    return CorrelationMatrix(labels, values)


def _diverging_color(v: float) -> str:
    # blue (-1) -> white (0) -> red (+1)
    t = min(1.0, abs(v))
    if v < 0:
        r, g, b = 1 - t * (1 - 0.13), 1 - t * (1 - 0.40), 1 - t * (1 - 0.67)
    else:
        r, g, b = 1 - t * (1 - 0.70), 1 - t * (1 - 0.09), 1 - t * (1 - 0.17)
    return "#{:02x}{:02x}{:02x}".format(*(round(255 * c) for c in (r, g, b)))


def heatmap_svg(corr: CorrelationMatrix, cell: int = 48, title: str = "Pearson correlation") -> str:
    """Annotated heatmap on a fixed [-1, 1] scale, so output is diff-stable."""
    d = len(corr.labels)
    margin = 170
    size = margin + d * cell + 20
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size + 30}" '
        f'font-family="sans-serif" font-size="11">',
        f'<text x="{size / 2:.1f}" y="18" text-anchor="middle" font-size="14">{title}</text>',
    ]
    top = 30 + margin
    for i, name in enumerate(corr.labels):
        y = top + i * cell + cell / 2 + 4
        parts.append(f'<text x="{margin - 6}" y="{y:.1f}" text-anchor="end">{name}</text>')
        x = margin + i * cell + cell / 2
        parts.append(
            f'<text x="{x:.1f}" y="{top - 6}" text-anchor="start" '
            f'transform="rotate(-60 {x:.1f} {top - 6})">{name}</text>'
        )
    for i in range(d):
        for j in range(d):
            v = float(corr.values[i, j])
            x, y = margin + j * cell, top + i * cell
            ink = "#ffffff" if abs(v) > 0.6 else "#000000"
            parts.append(
                f'<g class="cell" data-row="{i}" data-col="{j}">'
                f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="{_diverging_color(v)}" stroke="#ffffff"/>'
                f'<text x="{x + cell / 2:.1f}" y="{y + cell / 2 + 4:.1f}" text-anchor="middle" fill="{ink}">{v:.2f}</text>'
                "</g>"
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# ------------------------------------------------------------------------ PCA

def jacobi_eigh(a: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns (eigenvalues, eigenvectors as columns), sorted by descending eigenvalue.
    """
    a = np.array(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if not np.allclose(a, a.T, atol=1e-12 * max(1.0, np.abs(a).max(initial=0.0))):
        raise ValueError("matrix must be symmetric")
    d = a.shape[0]
    v = np.eye(d)
    scale = max(np.abs(a).max(initial=0.0), np.finfo(float).tiny)
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= tol * scale:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                # A <- J^T A J, touching rows/cols p and q only
                ap, aq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap, aq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:
        raise RuntimeError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")
    w = np.diag(a).copy()
    order = sorted(range(d), key=lambda k: (-w[k], k))
    w, v = w[order], v[:, order]
    # sign convention: largest-magnitude loading positive
    for k in range(d):
        if v[np.argmax(np.abs(v[:, k])), k] < 0:
            v[:, k] = -v[:, k]
    return w, v


def pca_from_matrix(X, labels=None, standardize: bool = True) -> PcaResult:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("PCA needs at least 2 samples")
    if X.shape[1] < 1:
        raise ValueError("PCA needs at least one feature")
    if not np.isfinite(X).all():
        raise ValueError("non-finite values in PCA input")
    n, d = X.shape
    labels = tuple(labels) if labels is not None else tuple(f"x{j}" for j in range(d))
    mean = X.mean(axis=0)
    centered = X - mean
    scale = np.ones(d)
    if standardize:
        sd = np.sqrt((centered**2).sum(axis=0) / (n - 1))
        scale = np.where(sd > 0, sd, 1.0)
        centered = centered / scale
    cov = centered.T @ centered / (n - 1)
    cov = (cov + cov.T) / 2
    eigvals, eigvecs = jacobi_eigh(cov)
    eigvals = np.clip(eigvals, 0.0, None)  # rank-deficient inputs give tiny negatives
    components = eigvecs.T
    total = eigvals.sum()
    ratio = eigvals / total if total > 0 else np.full(d, 1.0 / d)
    raw = ratio @ np.abs(components)
    importance = raw / raw.sum()
    return PcaResult(labels, components, eigvals, importance, mean, scale)


def pca(dataset: Dataset, standardize: bool = True) -> PcaResult:
    return pca_from_matrix(dataset.X, dataset.feature_names, standardize)


# --------------------------------------------------------------- Shapiro-Wilk

def _poly(coefs, x):
    # coefficients in increasing power order
    return sum(c * x**k for k, c in enumerate(coefs))


def shapiro_wilk(sample) -> ShapiroResult:
    """Shapiro-Wilk W with Royston's (AS R94) coefficients and p-value."""
    x = np.sort(np.asarray(sample, dtype=float))
    n = x.size
    if n < 3:
        raise ValueError(f"Shapiro-Wilk needs n >= 3, got {n}")
    if n > 5000:
        raise ValueError(f"Shapiro-Wilk approximation valid for n <= 5000, got {n}")
    if not np.isfinite(x).all():
        raise ValueError("non-finite values in sample")
    if x[-1] - x[0] < 1e-19 * max(1.0, abs(x[-1])):
        raise ValueError("Shapiro-Wilk undefined for a constant sample")

    if n == 3:
        a = np.array([-math.sqrt(0.5), 0.0, math.sqrt(0.5)])
    else:
        m = np.array([_NORMAL.inv_cdf((i - 0.375) / (n + 0.25)) for i in range(1, n + 1)])
        mm = m @ m
        u = 1.0 / math.sqrt(n)
        a_n = _poly([0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056], u) + m[-1] / math.sqrt(mm)
        if n > 5:
            a_n1 = _poly([0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633], u) + m[-2] / math.sqrt(mm)
            eps = (mm - 2 * m[-1] ** 2 - 2 * m[-2] ** 2) / (1 - 2 * a_n**2 - 2 * a_n1**2)
            a = m / math.sqrt(eps)
            a[-1], a[0], a[-2], a[1] = a_n, -a_n, a_n1, -a_n1
        else:
            eps = (mm - 2 * m[-1] ** 2) / (1 - 2 * a_n**2)
            a = m / math.sqrt(eps)
            a[-1], a[0] = a_n, -a_n

    centered = x - x.mean()
    w = float((a @ x) ** 2 / (centered @ centered))
    w = min(w, 1.0)

    if n == 3:
        p = max(0.0, (6.0 / math.pi) * (math.asin(math.sqrt(w)) - math.asin(math.sqrt(0.75))))
        return ShapiroResult(w, min(1.0, p), n)

    w1 = 1.0 - w
    if w1 <= 0.0:
        return ShapiroResult(w, 1.0, n)
    if n <= 11:
        gamma = -2.273 + 0.459 * n
        y = math.log(w1)
        if y >= gamma:
            return ShapiroResult(w, 1e-19, n)
        y = -math.log(gamma - y)
        mu = _poly([0.5440, -0.39978, 0.025054, -0.0006714], n)
        sigma = math.exp(_poly([1.3822, -0.77857, 0.062767, -0.0020322], n))
    else:
        ln_n = math.log(n)
        y = math.log(w1)
        mu = _poly([-1.5861, -0.31082, -0.083751, 0.0038915], ln_n)
        sigma = math.exp(_poly([-0.4803, -0.082676, 0.0030302], ln_n))
    z = (y - mu) / sigma
    p = 0.5 * math.erfc(z / math.sqrt(2.0))
    return ShapiroResult(w, float(min(1.0, max(0.0, p))), n)
