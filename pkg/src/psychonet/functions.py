"""Synthetic ground-truth psychometric functions and the simulated observer.

Each function maps native-unit stimuli to a success probability inside
[alpha, 1 - lapse]. ``alpha`` is the chance level (0.0 for detection tasks,
0.5 for two-alternative discrimination) and ``lapse`` caps the upper asymptote.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import erfc

from .validation import DomainError, check_bounds, check_stimuli

DETECTION = "detection"
DISCRIMINATION = "discrimination"
LN10 = float(np.log(10.0))
_EXP_CLIP = 280.0


def normal_cdf(z):
    """Standard Gaussian CDF via the complementary error function."""
    return 0.5 * erfc(-np.asarray(z, dtype=np.float64) / np.sqrt(2.0))


def _weibull_factor(t, beta=1.0):
    """exp(-10**(beta * t / 20)) evaluated stably for extreme arguments."""
    z = np.clip(np.asarray(beta) * np.asarray(t, dtype=np.float64) / 20.0, -_EXP_CLIP, _EXP_CLIP)
    return np.exp(-np.exp(LN10 * z))


def _band(alpha, lapse, inner):
    return alpha + (1.0 - lapse - alpha) * inner


@dataclass(frozen=True)
class SyntheticFunction:
    """Base: bounds checking, Bernoulli observer, (de)serialization."""

    alpha: float = 0.0
    lapse: float = 0.0

    kind = "abstract"

    def domain(self) -> np.ndarray:
        raise NotImplementedError

    def _inner(self, X) -> np.ndarray:
        raise NotImplementedError

    @property
    def dim(self) -> int:
        return self.domain().shape[0]

    def evaluate(self, X):
        """Success probabilities at native-unit stimuli (rows of X)."""
        X = check_stimuli(X, dim=self.dim)
        bounds = self.domain()
        if np.any(X < bounds[:, 0] - 1e-9) or np.any(X > bounds[:, 1] + 1e-9):
            raise DomainError(f"stimulus outside the {self.kind} domain")
        return self._inner(X)

    def evaluate_one(self, x) -> float:
        return float(self.evaluate(np.atleast_2d(x))[0])

    def to_dict(self) -> dict:
        doc = {"kind": self.kind, "alpha": self.alpha, "lapse": self.lapse}
        for name, value in self.__dict__.items():
            if name in ("alpha", "lapse"):
                continue
            if isinstance(value, np.ndarray):
                value = value.tolist()
            doc[name] = value
        return doc


@dataclass(frozen=True)
class Weibull(SyntheticFunction):
    """Product of per-dimension Weibull factors; thresholds demarcate a hypercuboid.

    Monotone nonincreasing in every coordinate: the probability falls from
    1 - lapse (far below threshold) to alpha (far above).
    """

    beta: tuple = (1.0,)
    thresh: tuple = (0.0,)
    bounds: tuple = ((-20.0, 20.0),)

    kind = "weibull"

    def domain(self):
        return check_bounds(self.bounds)

    def _inner(self, X):
        beta = np.asarray(self.beta, dtype=np.float64)
        thresh = np.asarray(self.thresh, dtype=np.float64)
        factors = _weibull_factor(X - thresh, beta)
        return _band(self.alpha, self.lapse, factors.prod(axis=1))


@dataclass(frozen=True)
class Sinusoid2D(SyntheticFunction):
    """1D Weibull over x1 whose threshold oscillates with x0: T = A sin(2 pi f x0)."""

    amplitude: float = 10.0
    frequency: float = 1.0
    beta: float = 1.0
    bounds: tuple = ((0.0, 1.0), (-20.0, 20.0))

    kind = "sin2d"

    def domain(self):
        return check_bounds(self.bounds)

    def threshold(self, x0):
        return self.amplitude * np.sin(2.0 * np.pi * self.frequency * np.asarray(x0))

    def _inner(self, X):
        t = X[:, 1] - self.threshold(X[:, 0])
        return _band(self.alpha, self.lapse, _weibull_factor(t, self.beta))


@dataclass(frozen=True)
class MaxLinear2D(SyntheticFunction):
    """Weibull over x1 with threshold max(floor, intercept + slope * x0)."""

    floor: float = 0.0
    intercept: float = -5.0
    slope: float = 10.0
    beta: float = 1.0
    bounds: tuple = ((0.0, 1.0), (-20.0, 20.0))

    kind = "max2d"

    def domain(self):
        return check_bounds(self.bounds)

    def threshold(self, x0):
        return np.maximum(self.floor, self.intercept + self.slope * np.asarray(x0))

    def _inner(self, X):
        t = X[:, 1] - self.threshold(X[:, 0])
        return _band(self.alpha, self.lapse, _weibull_factor(t, self.beta))


@dataclass(frozen=True)
class Donut2D(SyntheticFunction):
    """Radially non-monotonic band between an inner and an outer radius."""

    beta: float = 1.0
    r_inner: float = 8.0
    r_outer: float = 14.0
    bounds: tuple = ((-20.0, 20.0), (-20.0, 20.0))

    kind = "dn2d"

    def __post_init__(self):
        if not self.r_inner < self.r_outer:
            raise ValueError("r_inner must be smaller than r_outer")

    def domain(self):
        return check_bounds(self.bounds)

    def _inner(self, X):
        r = np.linalg.norm(X, axis=1)
        t = np.maximum(r - self.r_outer, self.r_inner - r)
        return _band(self.alpha, self.lapse, _weibull_factor(t, self.beta))


@dataclass(frozen=True)
class Novel2D(SyntheticFunction):
    """Benchmark detection surface on [-1, 1]^2 with a curved transition ridge."""

    bounds: tuple = ((-1.0, 1.0), (-1.0, 1.0))

    kind = "nv2d"

    def domain(self):
        return check_bounds(self.bounds)

    def ridge(self, X):
        x0, x1 = X[:, 0], X[:, 1]
        num = 4.0 * (1.0 - self.alpha) * (1.0 + x1)
        den = 0.1 + 0.8 * np.square(0.2 * x0 - 1.0) * np.square(x0)
        return num / den - 4.0 * (1.0 - 2.0 * self.alpha)

    def _inner(self, X):
        return _band(self.alpha, self.lapse, normal_cdf(self.ridge(X)))


HARTMANN6_ALPHA = np.array([2.0, 2.2, 2.8, 3.0])
HARTMANN6_A = np.array(
    [
        [8.0, 3.0, 10.0, 3.5, 1.7, 6.0],
        [0.5, 8.0, 10.0, 1.0, 6.0, 9.0],
        [3.0, 3.5, 1.7, 8.0, 10.0, 6.0],
        [10.0, 6.0, 0.5, 8.0, 1.0, 9.0],
    ]
)
HARTMANN6_P = 1e-4 * np.array(
    [
        [1312, 1696, 5569, 124, 8283, 5886],
        [2329, 4135, 8307, 3736, 1004, 9991],
        [2348, 1451, 3522, 2883, 3047, 6650],
        [4047, 8828, 8732, 5743, 1091, 381],
    ],
    dtype=np.float64,
)


@dataclass(frozen=True)
class Hartmann6(SyntheticFunction):
    """Six-dimensional multi-well benchmark on [0, 1]^6, rescaled and passed
    through the Gaussian CDF."""

    bounds: tuple = tuple(((0.0, 1.0),) * 6)

    kind = "hart6"

    def domain(self):
        return check_bounds(self.bounds)

    def _inner(self, X):
        diffs = X[:, None, :] - HARTMANN6_P[None, :, :]
        expo = np.einsum("bij,ij->bi", np.square(diffs), HARTMANN6_A)
        h = 1.0 - np.exp(-expo) @ HARTMANN6_ALPHA
        return _band(self.alpha, self.lapse, normal_cdf(3.0 * h - 2.0))


@dataclass(frozen=True)
class Surface8D(SyntheticFunction):
    """Eight-dimensional benchmark on [-1, 1]^8 with interacting trigonometric terms."""

    bounds: tuple = tuple(((-1.0, 1.0),) * 8)

    kind = "ps8d"

    denominator_floor: float = 1e-6

    def domain(self):
        return check_bounds(self.bounds)

    def _inner(self, X):
        phase = X[:, 1] * X[:, 7]
        c = (
            0.5 * X[:, 2] * (1.0 - np.cos(0.6 * np.pi * phase + X[:, 6])) + X[:, 3]
        ) * (2.0 - X[:, 5] * (1.0 + np.sin(0.3 * np.pi * phase + X[:, 6]))) - 1.0
        den = X[:, 4] * (2.0 + c)
        # the denominator vanishes on a measure-zero set inside the cube;
        # floor its magnitude, preserving sign
        sign = np.where(den < 0.0, -1.0, 1.0)
        den = sign * np.maximum(np.abs(den), self.denominator_floor)
        return _band(self.alpha, self.lapse, normal_cdf((X[:, 0] - c) / den))


@dataclass(frozen=True)
class Sphere(SyntheticFunction):
    """Weibull transition at a fixed distance from the center of the input space."""

    beta: float = 1.0
    radius: float | None = None
    bounds: tuple = ((-20.0, 20.0), (-20.0, 20.0))

    kind = "sphere"

    def domain(self):
        return check_bounds(self.bounds)

    @property
    def resolved_radius(self) -> float:
        if self.radius is not None:
            return self.radius
        spans = np.diff(self.domain(), axis=1)
        return float(spans.mean() / 4.0)

    def _inner(self, X):
        center = self.domain().mean(axis=1)
        t = np.linalg.norm(X - center, axis=1) - self.resolved_radius
        return _band(self.alpha, self.lapse, _weibull_factor(t, self.beta))


def sample_response(fn: SyntheticFunction, x, rng) -> int:
    """One Bernoulli draw from the observer at stimulus x."""
    return int(rng.random() < fn.evaluate_one(x))


def sample_responses(fn: SyntheticFunction, X, rng):
    p = fn.evaluate(X)
    return (rng.random(p.shape[0]) < p).astype(int)


# ---------------------------------------------------------------------------
# family registry, canonical parameter sets, and randomization

_WEIBULL_DIMS = {"wei1d": 1, "wei2d": 2, "wei3d": 3, "wei4d": 4}

FAMILIES = (
    "wei1d",
    "wei2d",
    "wei3d",
    "wei4d",
    "sin2d",
    "max2d",
    "dn2d",
    "nv2d",
    "hart6",
    "ps8d",
    "sphere",
)


def _alpha_for(mode: str) -> float:
    if mode == DETECTION:
        return 0.0
    if mode == DISCRIMINATION:
        return 0.5
    raise ValueError(f"unknown task mode {mode!r}")


def canonical(family: str, mode: str = DETECTION, dim: int | None = None) -> SyntheticFunction:
    """Fixed canonical parameter set for a function family."""
    alpha = _alpha_for(mode)
    if family in _WEIBULL_DIMS:
        k = _WEIBULL_DIMS[family]
        return Weibull(
            alpha=alpha,
            beta=(1.0,) * k,
            thresh=(0.0,) * k,
            bounds=((-20.0, 20.0),) * k,
        )
    if family == "sin2d":
        return Sinusoid2D(alpha=alpha)
    if family == "max2d":
        return MaxLinear2D(alpha=alpha)
    if family == "dn2d":
        return Donut2D(alpha=alpha)
    if family == "nv2d":
        return Novel2D(alpha=alpha)
    if family == "hart6":
        return Hartmann6(alpha=alpha)
    if family == "ps8d":
        return Surface8D(alpha=alpha)
    if family == "sphere":
        k = dim or 2
        return Sphere(alpha=alpha, bounds=((-20.0, 20.0),) * k)
    raise ValueError(f"unknown function family {family!r}")


def randomize(family: str, rng, mode: str = DETECTION, dim: int | None = None) -> SyntheticFunction:
    """Draw a random parameterization of a family.

    Ranges (relative to the canonical bounds span): Weibull thresholds uniform
    in the central 60% of each dimension with slopes in [0.5, 4]; sinusoid
    amplitude in [0.1, 0.4] of the x1 span with frequency in [0.5, 2]; max2d
    knee/intercept/slope scaled to a quarter span; donut inner radius in
    [0.15, 0.3] of the span with the outer radius a further [0.15, 0.3] out.
    Families without free shape parameters only receive alpha from the mode.
    """
    base = canonical(family, mode, dim=dim)
    bounds = base.domain()
    spans = bounds[:, 1] - bounds[:, 0]
    if isinstance(base, Weibull):
        k = bounds.shape[0]
        lo = bounds[:, 0] + 0.2 * spans
        hi = bounds[:, 1] - 0.2 * spans
        return replace(
            base,
            thresh=tuple(rng.uniform(lo, hi)),
            beta=tuple(rng.uniform(0.5, 4.0, size=k)),
        )
    if isinstance(base, Sinusoid2D):
        return replace(
            base,
            amplitude=float(rng.uniform(0.1, 0.4) * spans[1]),
            frequency=float(rng.uniform(0.5, 2.0)),
            beta=float(rng.uniform(0.5, 4.0)),
        )
    if isinstance(base, MaxLinear2D):
        quarter = spans[1] / 4.0
        return replace(
            base,
            floor=float(rng.uniform(-1.0, 1.0) * quarter),
            intercept=float(rng.uniform(-1.0, 1.0) * quarter),
            slope=float(rng.uniform(-1.0, 1.0) * spans[1]),
            beta=float(rng.uniform(0.5, 4.0)),
        )
    if isinstance(base, Donut2D):
        span = float(spans.mean())
        r_inner = float(rng.uniform(0.15, 0.3) * span)
        return replace(
            base,
            r_inner=r_inner,
            r_outer=r_inner + float(rng.uniform(0.15, 0.3) * span),
            beta=float(rng.uniform(0.5, 4.0)),
        )
    if isinstance(base, Sphere):
        return replace(base, beta=float(rng.uniform(0.5, 4.0)))
    return base


_KINDS = {
    cls.kind: cls
    for cls in (Weibull, Sinusoid2D, MaxLinear2D, Donut2D, Novel2D, Hartmann6, Surface8D, Sphere)
}


def from_dict(doc: dict) -> SyntheticFunction:
    doc = dict(doc)
    kind = doc.pop("kind")
    cls = _KINDS.get(kind)
    if cls is None:
        raise ValueError(f"unknown function kind {kind!r}")
    for key in ("bounds", "beta", "thresh"):
        if key in doc and isinstance(doc[key], list):
            doc[key] = tuple(tuple(v) if isinstance(v, list) else v for v in doc[key])
    return cls(**doc)
