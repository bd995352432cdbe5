"""Feedforward probability estimator: a dense ReLU network squashed through a
Weibull-style link and rescaled to the psychometric range [alpha, 1 - lapse].

The network's parameters live in a single flat float64 vector. The flat layout
is part of the serialization contract: for each layer (in order) the weight
matrix in row-major order, then the bias vector. All reverse-mode code
(parameter gradients, input gradients, tangent-kernel features) shares this
layout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .validation import EmptyDatasetError, check_responses, check_stimuli

LN10 = float(np.log(10.0))
# keeps 10**z finite in float64; beyond this the link is saturated anyway
_EXP_CLIP = 280.0

DEFAULT_HIDDEN = (256, 128, 32)


@dataclass(frozen=True)
class PsychScale:
    """Output scaling: lower asymptote, lapse rate, and the link's slope/threshold."""

    alpha: float = 0.0
    lapse: float = 0.0
    slope: float = 1.0
    threshold: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.alpha < 1.0) or not (0.0 <= self.lapse < 1.0):
            raise ValueError("alpha and lapse must lie in [0, 1)")
        if self.alpha + self.lapse >= 1.0:
            raise ValueError("alpha + lapse must be < 1")
        if self.slope <= 0.0:
            raise ValueError("slope must be positive")

    @property
    def span(self) -> float:
        return 1.0 - self.alpha - self.lapse

    def to_dict(self):
        return {
            "alpha": self.alpha,
            "lapse": self.lapse,
            "slope": self.slope,
            "threshold": self.threshold,
        }

    @classmethod
    def from_dict(cls, doc):
        return cls(**doc)


@dataclass(frozen=True)
class TrainConfig:
    """Per-trial retraining hyperparameters.

    ``decay_rate`` defaults to ``0.01 ** (1 / epochs)`` so the learning rate
    anneals to one percent of ``eta0`` over one trial's training. The default
    ``eta0`` is set so one trial's full-batch Adam movement outweighs the
    warm-start weight shrink; substantially smaller values freeze the
    estimator's amplitude at the shrink equilibrium and it never reaches the
    extreme probabilities.
    """

    eta0: float = 1.0e-2
    epochs: int = 100
    decay_rate: float | None = None
    shrink_lambda: float = 0.9
    perturb_sigma: float = 0.01
    dropout_p: float = 0.1
    input_noise_sigma: float = 0.01
    log_clamp: float = 100.0
    normalization_freeze_trial: int = 25
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.eta0 <= 0.0:
            raise ValueError("eta0 must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not (0.0 <= self.dropout_p < 1.0):
            raise ValueError("dropout_p must lie in [0, 1)")
        if not (0.0 < self.shrink_lambda <= 1.0):
            raise ValueError("shrink_lambda must lie in (0, 1]")
        if self.log_clamp <= 0.0:
            raise ValueError("log_clamp must be positive")

    @property
    def resolved_decay(self) -> float:
        if self.decay_rate is not None:
            return self.decay_rate
        return 0.01 ** (1.0 / self.epochs)

    def to_dict(self):
        return {
            "eta0": self.eta0,
            "epochs": self.epochs,
            "decay_rate": self.decay_rate,
            "shrink_lambda": self.shrink_lambda,
            "perturb_sigma": self.perturb_sigma,
            "dropout_p": self.dropout_p,
            "input_noise_sigma": self.input_noise_sigma,
            "log_clamp": self.log_clamp,
            "normalization_freeze_trial": self.normalization_freeze_trial,
            "adam_beta1": self.adam_beta1,
            "adam_beta2": self.adam_beta2,
            "adam_eps": self.adam_eps,
        }

    @classmethod
    def from_dict(cls, doc):
        return cls(**doc)


def param_count(layer_sizes) -> int:
    return sum(
        layer_sizes[i] * layer_sizes[i + 1] + layer_sizes[i + 1]
        for i in range(len(layer_sizes) - 1)
    )


class Network:
    """Dense ReLU network backed by one flat parameter vector."""

    __slots__ = ("layer_sizes", "params", "rng_seed", "_views")

    def __init__(self, layer_sizes, params, rng_seed=0):
        self.layer_sizes = [int(n) for n in layer_sizes]
        if len(self.layer_sizes) < 2 or self.layer_sizes[0] < 1:
            raise ValueError("invalid layer sizes")
        if self.layer_sizes[-1] != 1:
            raise ValueError("final layer width must be 1")
        params = np.asarray(params, dtype=np.float64).ravel()
        if params.shape[0] != param_count(self.layer_sizes):
            raise ValueError(
                f"expected {param_count(self.layer_sizes)} parameters, got {params.shape[0]}"
            )
        if not np.all(np.isfinite(params)):
            raise ValueError("network parameters must be finite")
        self.params = params
        self.rng_seed = int(rng_seed)
        self._views = None

    @property
    def dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_layers(self) -> int:
        return len(self.layer_sizes) - 1

    def layer_views(self):
        """(weight, bias) views into the flat vector, one pair per layer."""
        if self._views is None:
            views = []
            offset = 0
            for n_in, n_out in zip(self.layer_sizes[:-1], self.layer_sizes[1:]):
                w = self.params[offset : offset + n_in * n_out].reshape(n_out, n_in)
                offset += n_in * n_out
                b = self.params[offset : offset + n_out]
                offset += n_out
                views.append((w, b))
            self._views = views
        return self._views

    def copy(self) -> "Network":
        return Network(self.layer_sizes, self.params.copy(), self.rng_seed)


def he_init(dim: int, seed: int, hidden=DEFAULT_HIDDEN) -> Network:
    """He-initialized network: N(0, 2/fan_in) weights, zero biases."""
    if dim < 1:
        raise ValueError("input dimension must be >= 1")
    layer_sizes = [int(dim), *hidden, 1]
    rng = np.random.default_rng(seed)
    net = Network(layer_sizes, np.zeros(param_count(layer_sizes)), rng_seed=seed)
    for w, b in net.layer_views():
        w[...] = rng.normal(0.0, np.sqrt(2.0 / w.shape[1]), size=w.shape)
        b[...] = 0.0
    return net


# ---------------------------------------------------------------------------
# link function and output scaling


def weibull_squash(u, slope=1.0, threshold=0.0):
    """Map a raw network output to (0, 1): 1 - exp(-10**(slope*(u-T)/20))."""
    z = np.clip(slope * (np.asarray(u, dtype=np.float64) - threshold) / 20.0, -_EXP_CLIP, _EXP_CLIP)
    return -np.expm1(-np.exp(LN10 * z))


def squash_derivative(u, slope=1.0, threshold=0.0):
    z = np.clip(slope * (np.asarray(u, dtype=np.float64) - threshold) / 20.0, -_EXP_CLIP, _EXP_CLIP)
    e = np.exp(LN10 * z)
    return np.exp(-e) * e * (LN10 * slope / 20.0)


def scale_probability(p, scale: PsychScale):
    """Affinely map a (0,1) value into the psychometric band [alpha, 1-lapse]."""
    p = np.asarray(p, dtype=np.float64)
    if np.any(p < 0.0) or np.any(p > 1.0):
        raise ValueError("probability input must lie in [0, 1]")
    return scale.alpha + scale.span * p


def output_derivative(raw, scale: PsychScale):
    """d(prob)/d(raw), the chain factor through squash and scaling."""
    return scale.span * squash_derivative(raw, scale.slope, scale.threshold)


# ---------------------------------------------------------------------------
# forward / reverse passes


def forward_cached(net: Network, X, masks=None):
    """Forward pass keeping per-layer activations.

    ``masks`` is an optional list of per-hidden-layer unit masks (values 0 or
    1/(1-p), shared across the batch). Returns (raw, acts) where acts[0] is the
    input and acts[l] the masked ReLU output of hidden layer l.
    """
    X = check_stimuli(X, dim=net.dim)
    acts = [X]
    a = X
    views = net.layer_views()
    for idx, (w, b) in enumerate(views[:-1]):
        a = a @ w.T + b
        np.maximum(a, 0.0, out=a)
        if masks is not None and masks[idx] is not None:
            a *= masks[idx]
        acts.append(a)
    w, b = views[-1]
    raw = a @ w.T + b
    return raw[:, 0], acts


def forward(net: Network, X, scale: PsychScale, masks=None):
    """Raw output and scaled response probability for a batch of inputs."""
    raw, _ = forward_cached(net, X, masks)
    prob = scale_probability(weibull_squash(raw, scale.slope, scale.threshold), scale)
    return raw, prob


def backward_deltas(net: Network, acts, dout, masks=None):
    """Per-sample deltas for every layer given d(objective)/d(raw).

    Returns a list ``deltas`` with deltas[l] of shape (B, layer_sizes[l+1]).
    """
    views = net.layer_views()
    n_layers = len(views)
    deltas = [None] * n_layers
    deltas[-1] = np.asarray(dout, dtype=np.float64).reshape(-1, 1)
    for l in range(n_layers - 1, 0, -1):
        w, _ = views[l]
        g = deltas[l] @ w
        g *= acts[l] > 0.0
        if masks is not None and masks[l - 1] is not None:
            g *= masks[l - 1]
        deltas[l - 1] = g
    return deltas


def gradient_from_deltas(net: Network, acts, deltas, out=None):
    """Accumulate the flat parameter gradient (summed over the batch)."""
    if out is None:
        out = np.empty_like(net.params)
    offset = 0
    for l, (w, _) in enumerate(net.layer_views()):
        n_out, n_in = w.shape
        gw = out[offset : offset + n_in * n_out].reshape(n_out, n_in)
        np.matmul(deltas[l].T, acts[l], out=gw)
        offset += n_in * n_out
        out[offset : offset + n_out] = deltas[l].sum(axis=0)
        offset += n_out
    return out


def param_gradient(net: Network, x, scale: PsychScale):
    """Flat d(prob)/d(theta) for a single input (deterministic pass)."""
    raw, acts = forward_cached(net, np.atleast_2d(x))
    dout = output_derivative(raw, scale)
    deltas = backward_deltas(net, acts, dout)
    return gradient_from_deltas(net, acts, deltas)


def input_gradients(net: Network, X, scale: PsychScale):
    """d(prob)/d(input) for a batch of inputs, shape (B, K)."""
    raw, acts = forward_cached(net, X)
    dout = output_derivative(raw, scale)
    deltas = backward_deltas(net, acts, dout)
    w0, _ = net.layer_views()[0]
    return deltas[0] @ w0


def input_gradient(net: Network, x, scale: PsychScale):
    return input_gradients(net, np.atleast_2d(x), scale)[0]


# ---------------------------------------------------------------------------
# loss


def _clamped_logs(preds, clamp):
    with np.errstate(divide="ignore"):
        log_q = np.log(preds)
        log_1q = np.log1p(-preds)
    return np.clip(log_q, -clamp, clamp), np.clip(log_1q, -clamp, clamp)


def bce_loss(preds, labels, clamp=100.0):
    """Mean negative Bernoulli log-likelihood with log terms clamped to [-clamp, clamp]."""
    preds = np.asarray(preds, dtype=np.float64).ravel()
    labels = check_responses(labels, n=preds.shape[0])
    if preds.shape[0] == 0:
        raise EmptyDatasetError("bce_loss needs at least one sample")
    log_q, log_1q = _clamped_logs(preds, clamp)
    return float(np.mean(-(labels * log_q + (1.0 - labels) * log_1q)))


def bce_dprob(preds, labels, clamp=100.0):
    """d(mean clamped BCE)/d(pred) per sample; zero where the clamp is active."""
    n = preds.shape[0]
    with np.errstate(divide="ignore"):
        log_q = np.log(preds)
        log_1q = np.log1p(-preds)
    active_q = log_q > -clamp
    active_1q = log_1q > -clamp
    inv_q = np.where(active_q, 1.0 / np.where(preds > 0.0, preds, 1.0), 0.0)
    inv_1q = np.where(active_1q, 1.0 / np.where(preds < 1.0, 1.0 - preds, 1.0), 0.0)
    return (-(labels * inv_q) + (1.0 - labels) * inv_1q) / n


# ---------------------------------------------------------------------------
# per-trial training


def train_trial(net: Network, X, y, cfg: TrainConfig, scale: PsychScale, seed: int):
    """One trial's retraining pass.

    Applies shrink-and-perturb to the weight matrices, then runs full-batch
    Adam for ``cfg.epochs`` epochs with exponential learning-rate annealing,
    fresh per-epoch dropout masks, and a fresh per-epoch additive input-noise
    vector (shared across records, so record order never affects the result).

    Returns (trained network, trial information energy). The energy is the
    annealing-weighted running sum of squared loss-gradient norms,
    sum_k eta(k) * ||g_k||^2 / (N * epochs * eta0), with g_k the full-batch
    gradient actually used at epoch k, measured before the update.
    """
    X = check_stimuli(X, dim=net.dim)
    y = check_responses(y, n=X.shape[0])
    if X.shape[0] == 0:
        raise EmptyDatasetError("train_trial needs a nonempty dataset")

    rng = np.random.default_rng(seed)
    out = net.copy()
    for w, _ in out.layer_views():
        w *= cfg.shrink_lambda
        w += rng.normal(0.0, cfg.perturb_sigma, size=w.shape)

    n = X.shape[0]
    decay = cfg.resolved_decay
    p = cfg.dropout_p
    keep_scale = 1.0 / (1.0 - p) if p > 0.0 else 1.0
    hidden_sizes = out.layer_sizes[1:-1]

    m = np.zeros_like(out.params)
    v = np.zeros_like(out.params)
    grad = np.empty_like(out.params)
    energy = 0.0

    for k in range(cfg.epochs):
        lr = cfg.eta0 * decay**k
        noise = rng.normal(0.0, cfg.input_noise_sigma, size=out.dim)
        if p > 0.0:
            masks = [(rng.random(h) >= p) * keep_scale for h in hidden_sizes]
        else:
            masks = None

        raw, acts = forward_cached(out, X + noise, masks)
        prob = scale_probability(weibull_squash(raw, scale.slope, scale.threshold), scale)
        dloss = bce_dprob(prob, y, cfg.log_clamp) * output_derivative(raw, scale)
        deltas = backward_deltas(out, acts, dloss, masks)
        gradient_from_deltas(out, acts, deltas, out=grad)

        energy += lr * float(grad @ grad) / (n * cfg.epochs * cfg.eta0)

        t = k + 1
        m *= cfg.adam_beta1
        m += (1.0 - cfg.adam_beta1) * grad
        v *= cfg.adam_beta2
        v += (1.0 - cfg.adam_beta2) * np.square(grad)
        m_hat = m / (1.0 - cfg.adam_beta1**t)
        v_hat = v / (1.0 - cfg.adam_beta2**t)
        out.params -= lr * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)

    return out, energy


def fisher_energy(net: Network, X, y, cfg: TrainConfig, scale: PsychScale, seed: int):
    """Information energy of one trial's training on (X, y); see train_trial."""
    _, energy = train_trial(net, X, y, cfg, scale, seed)
    return energy


# ---------------------------------------------------------------------------
# Monte Carlo dropout (last-layer resampling)


def hidden_features(net: Network, X):
    """Deterministic activations of the last hidden layer, shape (B, width)."""
    _, acts = forward_cached(net, X)
    return acts[-1]


def mc_dropout_stats(net: Network, X, scale: PsychScale, n_draws, dropout_p, seed, masks=None):
    """Mean and population variance of stochastic forward passes.

    Only the last hidden layer is resampled: the activations up to that layer
    are computed once and the final linear layer is evaluated under ``n_draws``
    Bernoulli unit masks. Precomputed masks (n_draws, width) may be passed to
    share a mask set across calls.
    """
    if masks is None:
        if n_draws < 2:
            raise ValueError("n_draws must be >= 2")
        masks = sample_dropout_masks(net, n_draws, dropout_p, seed)
    h = hidden_features(net, X)
    w, b = net.layer_views()[-1]
    raws = (masks * w[0]) @ h.T + b[0]  # (n_draws, B)
    probs = scale_probability(weibull_squash(raws, scale.slope, scale.threshold), scale)
    mean = probs.mean(axis=0)
    var = probs.var(axis=0)
    # identical draws (e.g. zero dropout) must give exactly zero variance
    var[np.all(probs == probs[0], axis=0)] = 0.0
    return mean, var


def sample_dropout_masks(net: Network, n_draws, dropout_p, seed):
    """Draw (n_draws, last_hidden_width) inverted-dropout masks."""
    width = net.layer_sizes[-2]
    if dropout_p <= 0.0:
        return np.ones((n_draws, width))
    rng = np.random.default_rng(seed)
    keep = rng.random((n_draws, width)) >= dropout_p
    return keep / (1.0 - dropout_p)


# ---------------------------------------------------------------------------
# empirical tangent-kernel features

# The kernel of two inputs is the inner product of their flat parameter
# gradients. With per-sample deltas d_l and activations a_{l-1} this inner
# product factorizes layer by layer as (d_l . d'_l) * (a_{l-1} . a'_{l-1} + 1),
# the +1 accounting for the bias gradients, so Gram blocks reduce to a few
# matrix products and the flat gradients never need to be materialized.


class TangentCache:
    """Activations and per-sample output deltas for a batch of inputs."""

    __slots__ = ("acts", "deltas", "raw", "prob")

    def __init__(self, net: Network, X, scale: PsychScale):
        raw, acts = forward_cached(net, X)
        dout = output_derivative(raw, scale)
        self.acts = acts
        self.deltas = backward_deltas(net, acts, dout)
        self.raw = raw
        self.prob = scale_probability(weibull_squash(raw, scale.slope, scale.threshold), scale)


def tangent_gram(a: TangentCache, b: TangentCache):
    """Gram block of parameter-gradient inner products, shape (Ba, Bb)."""
    total = None
    for l in range(len(a.deltas)):
        block = (a.deltas[l] @ b.deltas[l].T) * (a.acts[l] @ b.acts[l].T + 1.0)
        total = block if total is None else total + block
    return total


def tangent_diag(a: TangentCache):
    """Diagonal of tangent_gram(a, a) without forming the full block."""
    total = np.zeros(a.deltas[0].shape[0])
    for l in range(len(a.deltas)):
        total += np.square(a.deltas[l]).sum(axis=1) * (np.square(a.acts[l]).sum(axis=1) + 1.0)
    return total
