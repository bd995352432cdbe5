"""Space-filling samplers: Sobol sequences, blue-noise point sets, grid snapping."""

from __future__ import annotations

import warnings

import numpy as np
from scipy.stats import qmc

from .validation import check_bounds


def _to_bounds(unit, bounds):
    return bounds[:, 0] + unit * (bounds[:, 1] - bounds[:, 0])


def sobol_point(index: int, dim: int, bounds) -> np.ndarray:
    """Point ``index`` of the standard (unscrambled) Sobol sequence, mapped into bounds.

    Index 0 is the all-zeros point of the sequence; live sessions start their
    exploration cursor at index 1 (the half-way point in every dimension).
    """
    if index < 0:
        raise ValueError("index must be >= 0")
    bounds = check_bounds(bounds, dim=dim)
    engine = qmc.Sobol(d=dim, scramble=False)
    if index:
        engine.fast_forward(index)
    return _to_bounds(engine.random(1)[0], bounds)


def sobol_points(count: int, dim: int, bounds, start_index: int = 0) -> np.ndarray:
    """``count`` consecutive standard Sobol points starting at ``start_index``."""
    bounds = check_bounds(bounds, dim=dim)
    engine = qmc.Sobol(d=dim, scramble=False)
    if start_index:
        engine.fast_forward(start_index)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        unit = engine.random(count)
    return _to_bounds(unit, bounds)


def scrambled_sobol(count: int, dim: int, bounds, seed: int) -> np.ndarray:
    """Owen-scrambled Sobol points, deterministic per seed."""
    bounds = check_bounds(bounds, dim=dim)
    engine = qmc.Sobol(d=dim, scramble=True, seed=seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        unit = engine.random(count)
    return _to_bounds(unit, bounds)


def blue_noise_subsample(bounds, n: int, dim: int, seed: int, shrink=0.7, max_failures=60):
    """``n`` points by dart throwing with a geometrically shrinking radius.

    Candidates are drawn uniformly; one is accepted when it keeps at least the
    current minimum distance to all accepted points. After ``max_failures``
    consecutive rejections the radius shrinks by ``shrink``. Returns
    (points, final_radius); all pairwise distances are >= final_radius.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    bounds = check_bounds(bounds, dim=dim)
    rng = np.random.default_rng(seed)
    spans = bounds[:, 1] - bounds[:, 0]
    # start near the dense-packing scale for n points in the box
    radius = 0.8 * float(np.linalg.norm(spans)) * n ** (-1.0 / dim)
    points = np.empty((n, dim))
    count = 0
    failures = 0
    while count < n:
        candidate = bounds[:, 0] + rng.random(dim) * spans
        if count == 0 or np.min(np.linalg.norm(points[:count] - candidate, axis=1)) >= radius:
            points[count] = candidate
            count += 1
            failures = 0
        else:
            failures += 1
            if failures >= max_failures:
                radius *= shrink
                failures = 0
    return points, radius


def snap_to_grid(x, n_levels: int, bounds) -> np.ndarray:
    """Snap each coordinate to the nearest of ``n_levels`` endpoint-inclusive
    uniform levels; exact ties resolve to the lower level."""
    if n_levels < 2:
        raise ValueError("n_levels must be >= 2")
    x = np.asarray(x, dtype=np.float64)
    bounds = check_bounds(bounds, dim=x.shape[-1])
    step = (bounds[:, 1] - bounds[:, 0]) / (n_levels - 1)
    t = (x - bounds[:, 0]) / step
    idx = np.clip(np.ceil(t - 0.5), 0, n_levels - 1)
    return bounds[:, 0] + idx * step
