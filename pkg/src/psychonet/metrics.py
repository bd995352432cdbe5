"""Evaluation metrics and test-set construction for simulation benchmarks."""

from __future__ import annotations

import numpy as np

from .functions import normal_cdf
from .sampling import scrambled_sobol
from .validation import check_bounds

BRIER_STD_FLOOR = 1e-9


def rmse(predicted, truth):
    """Root mean squared difference between two probability fields."""
    predicted = np.asarray(predicted, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    return float(np.sqrt(np.mean(np.square(predicted - truth))))


def exceed_probability(mean, std, mu_star):
    """P(value >= mu_star) under a Gaussian with the given mean/std."""
    std = np.maximum(np.asarray(std, dtype=np.float64), BRIER_STD_FLOOR)
    return 1.0 - normal_cdf((mu_star - np.asarray(mean, dtype=np.float64)) / std)


def brier(mean, std, truth, mu_star):
    """Mean squared error of the predicted supra-threshold probability.

    ``truth`` holds the ground-truth response probabilities; the binary target
    is whether each exceeds mu_star, and the prediction is the Gaussian
    exceedance probability from the dropout mean/std.
    """
    truth = np.asarray(truth, dtype=np.float64)
    o = (truth >= mu_star).astype(np.float64)
    p = exceed_probability(mean, std, mu_star)
    return float(np.mean(np.square(o - p)))


def default_mu_star(alpha: float) -> float:
    return (1.0 + alpha) / 2.0


_trapezoid = getattr(np, "trapezoid", None) or np.trapz


def auc(series) -> float:
    """Trapezoidal area under a per-trial series with unit spacing."""
    series = np.asarray(series, dtype=np.float64)
    if series.shape[0] < 2:
        return 0.0
    return float(_trapezoid(series))


def _midranks(values):
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(values.shape[0])
    sorted_vals = values[order]
    i = 0
    while i < len(sorted_vals):
        j = i
        while j + 1 < len(sorted_vals) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman(xs, ys) -> float:
    """Spearman rank correlation with average ranks for ties."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape[0] != ys.shape[0] or xs.shape[0] < 2:
        raise ValueError("spearman needs two equal-length series with >= 2 entries")
    rx = _midranks(xs)
    ry = _midranks(ys)
    rx = rx - rx.mean()
    ry = ry - ry.mean()
    denom = np.sqrt((rx @ rx) * (ry @ ry))
    if denom == 0.0:
        return 0.0
    return float((rx @ ry) / denom)


def make_test_set(bounds, size=None, seed=0):
    """Fixed evaluation points over the bounds.

    K <= 2 uses the full 64-per-dimension grid, K == 3 the 16^3 grid, and
    higher dimensions ``size`` (default 4096) scrambled Sobol points.
    """
    bounds = check_bounds(bounds)
    k = bounds.shape[0]
    if k <= 2:
        per_dim = 64
    elif k == 3:
        per_dim = 16
    else:
        per_dim = None
    if per_dim is not None:
        axes = [np.linspace(low, high, per_dim) for low, high in bounds]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.column_stack([m.ravel() for m in mesh])
    return scrambled_sobol(size or 4096, k, bounds, seed)
