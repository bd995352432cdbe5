"""Input validation helpers shared across the package."""

import numpy as np


class EmptyDatasetError(ValueError):
    """Raised when an operation requires at least one recorded trial."""


class SingularKernelError(RuntimeError):
    """Raised when the lookahead Gram matrix stays singular after jitter escalation."""


class DomainError(ValueError):
    """Raised when a stimulus lies outside a function's domain."""


def check_array(X, ndim=2, name="X"):
    """Coerce to a float64 array with the requested rank and finite entries."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == ndim - 1:
        X = X[np.newaxis, :] if ndim == 2 else X[np.newaxis]
    if X.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains non-finite values")
    return X


def check_stimuli(X, dim=None):
    X = check_array(X, ndim=2, name="stimuli")
    if dim is not None and X.shape[1] != dim:
        raise ValueError(f"expected stimuli of dimension {dim}, got {X.shape[1]}")
    return X


def check_responses(y, n=None):
    y = np.asarray(y, dtype=np.float64).ravel()
    if n is not None and y.shape[0] != n:
        raise ValueError(f"expected {n} responses, got {y.shape[0]}")
    if y.size and not np.all((y == 0.0) | (y == 1.0)):
        raise ValueError("responses must be binary (0 or 1)")
    return y


def check_bounds(bounds, dim=None):
    """Validate a (K, 2) array of per-dimension (low, high) stimulus bounds."""
    bounds = np.asarray(bounds, dtype=np.float64)
    if bounds.ndim != 2 or bounds.shape[1] != 2:
        raise ValueError(f"bounds must have shape (K, 2), got {bounds.shape}")
    if not np.all(np.isfinite(bounds)):
        raise ValueError("bounds must be finite")
    if np.any(bounds[:, 1] <= bounds[:, 0]):
        raise ValueError("each bound must satisfy low < high")
    if dim is not None and bounds.shape[0] != dim:
        raise ValueError(f"expected bounds for {dim} dimensions, got {bounds.shape[0]}")
    return bounds


def in_bounds(x, bounds, atol=1e-9):
    x = np.asarray(x, dtype=np.float64)
    return bool(np.all(x >= bounds[:, 0] - atol) and np.all(x <= bounds[:, 1] + atol))


def check_probability(p, name="p"):
    p = np.asarray(p, dtype=np.float64)
    if np.any(p < 0.0) or np.any(p > 1.0):
        raise ValueError(f"{name} must lie in [0, 1]")
    return p
