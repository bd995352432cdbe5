"""Stimulus selection: the four-component acquisition score and its maximizer.

Per trial, candidates are scored by the weighted geometric mean of
  - grad: normalized input-gradient magnitude of the estimate,
  - prox: one minus the normalized Parzen density of past stimuli,
  - unc:  normalized Monte Carlo dropout standard deviation,
  - la:   normalized worst-case lookahead model change under a
          tangent-kernel one-step retraining approximation.

Each component's normalizer is the maximum of its raw value over the trial's
candidate sweep and is held fixed during refinement. A scheduled fraction of
trials bypasses scoring entirely and queries the next Sobol point instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError
from scipy.optimize import minimize

from . import network as nn
from ._seeds import derive_seed
from .sampling import blue_noise_subsample, scrambled_sobol
from .validation import EmptyDatasetError, SingularKernelError, check_bounds, check_stimuli

COMPONENTS = ("grad", "prox", "unc", "la")
_DEGENERATE_NORM = 1e-12
_LOG_FLOOR = 1e-300


@dataclass(frozen=True)
class AcquisitionWeights:
    """Exponents of the four components in the geometric mean."""

    grad: float = 0.8
    prox: float = 10.6
    unc: float = 6.0
    la: float = 4.0

    def __post_init__(self):
        values = self.as_array()
        if np.any(values < 0.0):
            raise ValueError("acquisition weights must be nonnegative")
        if values.sum() <= 0.0:
            raise ValueError("at least one acquisition weight must be positive")

    def as_array(self):
        return np.array([self.grad, self.prox, self.unc, self.la], dtype=np.float64)

    def masked(self, enabled) -> np.ndarray:
        values = self.as_array()
        mask = np.array([name in enabled for name in COMPONENTS])
        return np.where(mask, values, 0.0)


@dataclass(frozen=True)
class ExplorationSchedule:
    p0: float = 0.5
    decay: float = 0.97
    floor: float = 0.05


@dataclass(frozen=True)
class AcquisitionConfig:
    weights: AcquisitionWeights = field(default_factory=AcquisitionWeights)
    parzen_h: float = 0.25
    mc_samples: int = 100
    lookahead_subsample: int = 128
    ntk_jitter: float = 1e-6
    candidate_count: int = 512
    restarts: int = 16
    exploration: ExplorationSchedule = field(default_factory=ExplorationSchedule)
    refine_maxiter: int = 25

    def __post_init__(self):
        if self.parzen_h <= 0.0:
            raise ValueError("parzen_h must be positive")
        if self.lookahead_subsample < 1:
            raise ValueError("lookahead_subsample must be >= 1")
        if self.ntk_jitter <= 0.0:
            raise ValueError("ntk_jitter must be positive")
        if not (self.candidate_count >= self.restarts >= 1):
            raise ValueError("need candidate_count >= restarts >= 1")

    def to_dict(self):
        return {
            "weights": list(self.weights.as_array()),
            "parzen_h": self.parzen_h,
            "mc_samples": self.mc_samples,
            "lookahead_subsample": self.lookahead_subsample,
            "ntk_jitter": self.ntk_jitter,
            "candidate_count": self.candidate_count,
            "restarts": self.restarts,
            "exploration": [self.exploration.p0, self.exploration.decay, self.exploration.floor],
            "refine_maxiter": self.refine_maxiter,
        }

    @classmethod
    def from_dict(cls, doc):
        doc = dict(doc)
        if "weights" in doc:
            doc["weights"] = AcquisitionWeights(*doc["weights"])
        if "exploration" in doc:
            doc["exploration"] = ExplorationSchedule(*doc["exploration"])
        return cls(**doc)


@dataclass
class CandidateScore:
    x: np.ndarray
    components: dict
    combined: float


def exploration_probability(t: int, schedule: ExplorationSchedule = ExplorationSchedule()) -> float:
    """Probability that trial ``t`` (1-based) is a random Sobol query."""
    if t < 1:
        raise ValueError("trial index must be >= 1")
    return max(schedule.floor, schedule.p0 * schedule.decay ** (t - 1))


def parzen_density(X_eval, X_data, h: float):
    """Gaussian kernel density of the recorded stimuli at the evaluation points."""
    X_eval = np.atleast_2d(np.asarray(X_eval, dtype=np.float64))
    X_data = np.atleast_2d(np.asarray(X_data, dtype=np.float64))
    if X_data.shape[0] == 0:
        raise EmptyDatasetError("parzen_density needs at least one recorded stimulus")
    n, k = X_data.shape
    d2 = np.square(X_eval[:, None, :] - X_data[None, :, :]).sum(axis=2)
    kernel = np.exp(-d2 / (2.0 * h * h))
    norm = n * h**k * (2.0 * np.pi) ** (k / 2.0)
    return kernel.sum(axis=1) / norm


def proximity_component(density, normalizer: float):
    """1 - density / normalizer, clamped to [0, 1]."""
    if normalizer <= 0.0:
        raise ValueError("normalizer must be positive")
    return np.clip(1.0 - np.asarray(density) / normalizer, 0.0, 1.0)


def normalized_component(raw, normalizer: float):
    """raw / normalizer clamped to [0, 1]; all ones when the normalizer degenerates."""
    raw = np.asarray(raw, dtype=np.float64)
    if normalizer < _DEGENERATE_NORM:
        return np.ones_like(raw)
    return np.clip(raw / normalizer, 0.0, 1.0)


def combine(components, weights):
    """Weighted geometric mean with 0^0 := 1 so zero-weight components are inert.

    Evaluated in log space so large exponents cannot underflow the product.
    """
    components = np.atleast_2d(np.asarray(components, dtype=np.float64))
    weights = np.asarray(weights, dtype=np.float64)
    total = weights.sum()
    if total <= 0.0:
        raise ValueError("weights must sum to a positive value")
    active = weights > 0.0
    comps = components[:, active]
    annihilated = np.any(comps == 0.0, axis=1)
    with np.errstate(divide="ignore"):
        logs = np.where(comps > 0.0, np.log(np.maximum(comps, _LOG_FLOOR)), 0.0)
    out = np.exp(logs @ weights[active] / total)
    out[annihilated] = 0.0
    return out


# ---------------------------------------------------------------------------
# lookahead via the empirical tangent kernel


def _factor_with_escalation(gram, jitter):
    """Cholesky of gram + jitter*I, escalating jitter x10 up to three times."""
    j = jitter
    for _ in range(4):
        try:
            return cho_factor(gram + j * np.eye(gram.shape[0]), lower=True), j
        except LinAlgError:
            j *= 10.0
    raise SingularKernelError("lookahead Gram matrix is singular even after jitter escalation")


def ntk_lookahead_predict(net, scale, X_train, y_train, x_new, y_new, X_eval, jitter=1e-6):
    """Predictions at ``X_eval`` after a hypothetical one-step retraining on
    the history augmented with (x_new, y_new).

    Direct (reference) form: assembles the full augmented Gram matrix and
    solves it once. The trial scorer uses an algebraically equivalent cached
    factorization; the two must agree.
    """
    X_new = np.atleast_2d(x_new)
    if X_train is None or len(X_train) == 0:
        X_plus = X_new
        y_plus = np.asarray([y_new], dtype=np.float64)
    else:
        X_plus = np.vstack([check_stimuli(X_train), X_new])
        y_plus = np.concatenate([np.asarray(y_train, dtype=np.float64), [y_new]])
    cache_plus = nn.TangentCache(net, X_plus, scale)
    cache_eval = nn.TangentCache(net, check_stimuli(X_eval), scale)
    gram = nn.tangent_gram(cache_plus, cache_plus)
    factor, _ = _factor_with_escalation(gram, jitter)
    weights = cho_solve(factor, y_plus - cache_plus.prob)
    return cache_eval.prob + nn.tangent_gram(cache_eval, cache_plus) @ weights


class TrialScorer:
    """Per-trial acquisition scorer over immutable snapshots of the model state.

    Builds the trial's caches once (training-point tangent features, Gram
    factorization, lookahead evaluation set, dropout mask set), exposes raw
    component values for arbitrary native-unit stimuli, and freezes the
    normalizers estimated from the candidate sweep.
    """

    def __init__(self, model, X_history, y_history, cfg: AcquisitionConfig, bounds, seed,
                 weights=None):
        self.model = model
        self.cfg = cfg
        self.bounds = check_bounds(bounds)
        self.weights = self.cfg.weights.as_array() if weights is None else np.asarray(weights)
        self.net = model.network_
        self.scale = model.scale
        self.X_native = check_stimuli(X_history)
        self.y = np.asarray(y_history, dtype=np.float64)
        self.Xn = model.normalize(self.X_native)
        self.jitter = cfg.ntk_jitter
        self.normalizers = None

        self._need = {name: w > 0.0 for name, w in zip(COMPONENTS, self.weights)}
        if self._need["unc"]:
            self._mc_masks = nn.sample_dropout_masks(
                self.net, cfg.mc_samples, model.dropout_p, derive_seed(seed, "mc")
            )
        if self._need["la"]:
            self._init_lookahead(seed)

    # -- lookahead caches --------------------------------------------------

    def _init_lookahead(self, seed):
        U_native, _ = blue_noise_subsample(
            self.bounds,
            self.cfg.lookahead_subsample,
            self.bounds.shape[0],
            derive_seed(seed, "bluenoise"),
        )
        self._cache_u = nn.TangentCache(self.net, self.model.normalize(U_native), self.scale)
        n = self.Xn.shape[0]
        if n:
            self._cache_train = nn.TangentCache(self.net, self.Xn, self.scale)
            gram = nn.tangent_gram(self._cache_train, self._cache_train)
            self._factor, self.jitter = _factor_with_escalation(gram, self.cfg.ntk_jitter)
            resid = self.y - self._cache_train.prob
            self._solved_resid = cho_solve(self._factor, resid)
            self._gram_u_train = nn.tangent_gram(self._cache_u, self._cache_train)
            self._base = self._gram_u_train @ self._solved_resid
        else:
            self._cache_train = None
            self._base = np.zeros(self._cache_u.prob.shape[0])

    def _lookahead_raw(self, cache_c: nn.TangentCache):
        """Worst-case mean squared lookahead change over the evaluation set."""
        diag_c = nn.tangent_diag(cache_c)
        gram_uc = nn.tangent_gram(self._cache_u, cache_c)
        q_c = cache_c.prob
        if self._cache_train is not None:
            gram_xc = nn.tangent_gram(self._cache_train, cache_c)
            solved = cho_solve(self._factor, gram_xc)
            denom = diag_c + self.jitter - np.einsum("nb,nb->b", gram_xc, solved)
            denom = np.maximum(denom, 1e-18)
            b_dot_s = gram_xc.T @ self._solved_resid
            v = gram_uc - self._gram_u_train @ solved
            base_sq = float(self._base @ self._base)
            cross = self._base @ v
            vv = np.einsum("ub,ub->b", v, v)
            s_best = None
            for label in (0.0, 1.0):
                beta = (label - q_c - b_dot_s) / denom
                s = base_sq + 2.0 * beta * cross + beta * beta * vv
                s_best = s if s_best is None else np.minimum(s_best, s)
        else:
            vv = np.einsum("ub,ub->b", gram_uc, gram_uc)
            s_best = None
            for label in (0.0, 1.0):
                beta = (label - q_c) / np.maximum(diag_c + self.jitter, 1e-18)
                s = beta * beta * vv
                s_best = s if s_best is None else np.minimum(s_best, s)
        return s_best / self._cache_u.prob.shape[0]

    # -- raw component evaluation -------------------------------------------

    def raw_components(self, X_native):
        """Raw (pre-normalization) component values at native-unit stimuli."""
        X_native = np.atleast_2d(np.asarray(X_native, dtype=np.float64))
        Xn = self.model.normalize(X_native)
        b = X_native.shape[0]
        raw = {}
        raw["grad"] = (
            np.linalg.norm(nn.input_gradients(self.net, Xn, self.scale), axis=1)
            if self._need["grad"]
            else np.zeros(b)
        )
        raw["prox"] = (
            parzen_density(Xn, self.Xn, self.cfg.parzen_h) if self._need["prox"] else np.zeros(b)
        )
        if self._need["unc"]:
            _, var = nn.mc_dropout_stats(
                self.net, Xn, self.scale, None, None, None, masks=self._mc_masks
            )
            raw["unc"] = np.sqrt(var)
        else:
            raw["unc"] = np.zeros(b)
        raw["la"] = (
            self._lookahead_raw(nn.TangentCache(self.net, Xn, self.scale))
            if self._need["la"]
            else np.zeros(b)
        )
        return raw

    def calibrate(self, candidates):
        """Fix the per-trial normalizers to the maxima over the candidate sweep."""
        raw = self.raw_components(candidates)
        self.normalizers = {name: float(np.max(raw[name])) for name in COMPONENTS}
        return raw

    def components(self, X_native, raw=None):
        """Normalized component values in [0, 1] (requires calibrate())."""
        if self.normalizers is None:
            raise RuntimeError("calibrate() must run before scoring")
        if raw is None:
            raw = self.raw_components(X_native)
        out = {}
        for name in COMPONENTS:
            if not self._need[name]:
                out[name] = np.ones_like(raw[name])
            elif name == "prox":
                if self.normalizers["prox"] < _DEGENERATE_NORM:
                    out[name] = np.ones_like(raw[name])
                else:
                    out[name] = proximity_component(raw[name], self.normalizers["prox"])
            else:
                out[name] = normalized_component(raw[name], self.normalizers[name])
        return out

    def combined(self, X_native, raw=None):
        comps = self.components(X_native, raw=raw)
        stacked = np.column_stack([comps[name] for name in COMPONENTS])
        return combine(stacked, self.weights), comps

    def score_one(self, x_native) -> CandidateScore:
        values, comps = self.combined(np.atleast_2d(x_native))
        return CandidateScore(
            x=np.asarray(x_native, dtype=np.float64),
            components={name: float(comps[name][0]) for name in COMPONENTS},
            combined=float(values[0]),
        )


def _neg_log_combined(scorer: TrialScorer, X):
    values, _ = scorer.combined(X)
    return -np.log(np.maximum(values, _LOG_FLOOR))


def _refine_starts(scorer: TrialScorer, starts, bounds, maxiter):
    """Bounded quasi-Newton ascent on the log score from several start points.

    The restarts are refined jointly as one separable L-BFGS-B problem (the
    objective is the sum of the per-start terms, so each block follows its own
    finite-difference gradient, step 1e-6); one scorer call per iteration
    evaluates every start and every coordinate perturbation at once.
    """
    n_starts, dim = starts.shape
    eps = 1e-6
    low, high = bounds[:, 0], bounds[:, 1]

    def objective(z):
        points = np.clip(z.reshape(n_starts, dim), low, high)
        steps = np.where(points + eps <= high, eps, -eps)
        batch = [points]
        for k in range(dim):
            shifted = points.copy()
            shifted[:, k] += steps[:, k]
            batch.append(shifted)
        f = _neg_log_combined(scorer, np.vstack(batch)).reshape(dim + 1, n_starts)
        grad = (f[1:] - f[0]) / steps.T
        return float(f[0].sum()), grad.T.ravel()

    res = minimize(
        objective,
        starts.ravel(),
        jac=True,
        method="L-BFGS-B",
        bounds=list(zip(np.tile(low, n_starts), np.tile(high, n_starts))),
        options={"maxiter": maxiter},
    )
    return np.clip(res.x.reshape(n_starts, dim), low, high)


def maximize_acquisition(model, X_history, y_history, cfg: AcquisitionConfig, bounds, seed,
                         weights=None, return_sweep=False):
    """Candidate sweep plus bounded quasi-Newton refinement of the top starts.

    Scores ``cfg.candidate_count`` scrambled Sobol candidates, freezes the
    component normalizers at their sweep maxima, then refines the best
    ``cfg.restarts`` candidates with L-BFGS-B on the log score. Returns the
    best point found, never worse than the best raw candidate.
    """
    bounds = check_bounds(bounds)
    scorer = TrialScorer(model, X_history, y_history, cfg, bounds, seed, weights=weights)
    candidates = scrambled_sobol(
        cfg.candidate_count, bounds.shape[0], bounds, derive_seed(seed, "candidates")
    )
    raw = scorer.calibrate(candidates)
    values, comps = scorer.combined(candidates, raw=raw)

    order = np.argsort(values)[::-1]
    best_idx = int(order[0])
    best_x = candidates[best_idx]
    best_value = float(values[best_idx])

    refined = _refine_starts(scorer, candidates[order[: cfg.restarts]], bounds, cfg.refine_maxiter)
    refined_values, _ = scorer.combined(refined)
    top = int(np.argmax(refined_values))
    if float(refined_values[top]) > best_value:
        best_value = float(refined_values[top])
        best_x = refined[top]

    score = scorer.score_one(best_x)
    if return_sweep:
        sweep = {
            "x": candidates,
            "components": comps,
            "combined": values,
            "normalizers": scorer.normalizers,
        }
        return best_x, score, sweep
    return best_x, score
