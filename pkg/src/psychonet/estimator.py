"""sklearn-style estimator around the network core.

``PsychometricNetwork.fit(X, y)`` performs one trial's warm-start retraining on
the full response history; ``predict_proba`` / ``response_probability`` give
deterministic estimates and ``predict_uncertainty`` the Monte Carlo dropout
mean/std. Stimuli are always passed in native units; the estimator owns the
zero-mean/unit-variance normalization, including the freeze after trial 25.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from . import network as nn
from ._seeds import derive_seed
from .validation import check_responses, check_stimuli

STD_FLOOR = 1e-8
SNAPSHOT_FORMAT = "psychonet-network"
SNAPSHOT_VERSION = 1


def fit_normalization(X, trial_index, freeze_at, frozen=None):
    """Per-dimension mean/std of the recorded stimuli, frozen after ``freeze_at``.

    While ``trial_index <= freeze_at`` (or no frozen statistics exist yet) the
    statistics are recomputed from ``X``; afterwards the stored pair is
    returned unchanged. Standard deviations are floored at 1e-8.
    """
    if frozen is not None and trial_index > freeze_at:
        return frozen
    X = check_stimuli(X)
    mean = X.mean(axis=0)
    std = np.maximum(X.std(axis=0), STD_FLOOR)
    return mean, std


class PsychometricNetwork(BaseEstimator):
    """Neural response-probability estimator with trial-by-trial retraining.

    Parameters mirror the training/scaling configuration; fitted state lives in
    the underscore attributes (``network_``, ``norm_mean_``, ``norm_std_``,
    ``fisher_energy_``).
    """

    def __init__(
        self,
        alpha=0.0,
        lapse=0.0,
        link_slope=1.0,
        link_threshold=0.0,
        hidden=nn.DEFAULT_HIDDEN,
        eta0=3.0e-4,
        epochs=100,
        decay_rate=None,
        shrink_lambda=0.9,
        perturb_sigma=0.01,
        dropout_p=0.1,
        input_noise_sigma=0.01,
        log_clamp=100.0,
        normalization_freeze_trial=25,
        mc_samples=100,
        seed=0,
    ):
        self.alpha = alpha
        self.lapse = lapse
        self.link_slope = link_slope
        self.link_threshold = link_threshold
        self.hidden = hidden
        self.eta0 = eta0
        self.epochs = epochs
        self.decay_rate = decay_rate
        self.shrink_lambda = shrink_lambda
        self.perturb_sigma = perturb_sigma
        self.dropout_p = dropout_p
        self.input_noise_sigma = input_noise_sigma
        self.log_clamp = log_clamp
        self.normalization_freeze_trial = normalization_freeze_trial
        self.mc_samples = mc_samples
        self.seed = seed

    # -- configuration views -------------------------------------------------

    @property
    def scale(self) -> nn.PsychScale:
        return nn.PsychScale(self.alpha, self.lapse, self.link_slope, self.link_threshold)

    @property
    def train_config(self) -> nn.TrainConfig:
        return nn.TrainConfig(
            eta0=self.eta0,
            epochs=self.epochs,
            decay_rate=self.decay_rate,
            shrink_lambda=self.shrink_lambda,
            perturb_sigma=self.perturb_sigma,
            dropout_p=self.dropout_p,
            input_noise_sigma=self.input_noise_sigma,
            log_clamp=self.log_clamp,
            normalization_freeze_trial=self.normalization_freeze_trial,
        )

    # -- lifecycle -----------------------------------------------------------

    def initialize(self, dim: int) -> "PsychometricNetwork":
        """He-initialize the network for ``dim`` input dimensions."""
        self.network_ = nn.he_init(dim, self.seed, hidden=tuple(self.hidden))
        self.norm_mean_ = np.zeros(dim)
        self.norm_std_ = np.ones(dim)
        self.norm_frozen_ = False
        self.fisher_energy_ = None
        self.n_trials_ = 0
        return self

    def _check_initialized(self):
        if not hasattr(self, "network_"):
            raise RuntimeError("estimator is not initialized; call initialize() or fit() first")

    def fit(self, X, y, train_seed=None):
        """Retrain on the full response history (one trial step).

        Normalization statistics are refreshed while the history is at most
        ``normalization_freeze_trial`` records long and frozen afterwards.
        """
        X = check_stimuli(X)
        y = check_responses(y, n=X.shape[0])
        if not hasattr(self, "network_"):
            self.initialize(X.shape[1])
        trial = X.shape[0]
        if trial <= self.normalization_freeze_trial or not self.norm_frozen_:
            self.norm_mean_, self.norm_std_ = fit_normalization(
                X, trial, self.normalization_freeze_trial
            )
            self.norm_frozen_ = trial >= self.normalization_freeze_trial
        if train_seed is None:
            train_seed = derive_seed(self.seed, "train", trial)
        self.network_, self.fisher_energy_ = nn.train_trial(
            self.network_, self.normalize(X), y, self.train_config, self.scale, train_seed
        )
        self.n_trials_ = trial
        return self

    # -- coordinate handling ---------------------------------------------------

    def normalize(self, X):
        return (check_stimuli(X, dim=self.network_.dim) - self.norm_mean_) / self.norm_std_

    # -- prediction ------------------------------------------------------------

    def response_probability(self, X):
        """Deterministic success probability at native-unit stimuli, shape (B,)."""
        self._check_initialized()
        _, prob = nn.forward(self.network_, self.normalize(X), self.scale)
        return prob

    def predict_proba(self, X):
        p = self.response_probability(X)
        return np.column_stack([1.0 - p, p])

    def predict(self, X):
        return (self.response_probability(X) >= 0.5).astype(int)

    def predict_uncertainty(self, X, n_draws=None, seed=0):
        """Monte Carlo dropout mean and standard deviation at native stimuli."""
        self._check_initialized()
        mean, var = nn.mc_dropout_stats(
            self.network_,
            self.normalize(X),
            self.scale,
            n_draws or self.mc_samples,
            self.dropout_p,
            seed,
        )
        return mean, np.sqrt(var)

    # -- serialization -----------------------------------------------------------

    def snapshot(self) -> dict:
        """Portable network snapshot: layer sizes, flat parameters (layer-major,
        weights row-major then bias per layer), scale config, normalization."""
        self._check_initialized()
        return {
            "format": SNAPSHOT_FORMAT,
            "version": SNAPSHOT_VERSION,
            "layer_sizes": list(self.network_.layer_sizes),
            "params": [float(v) for v in self.network_.params],
            "rng_seed": self.network_.rng_seed,
            "scale": self.scale.to_dict(),
            "train": self.train_config.to_dict(),
            "normalization": {
                "mean": [float(v) for v in self.norm_mean_],
                "std": [float(v) for v in self.norm_std_],
                "frozen": bool(self.norm_frozen_),
            },
            "mc_samples": self.mc_samples,
            "seed": self.seed,
            "n_trials": self.n_trials_,
        }

    @classmethod
    def from_snapshot(cls, doc: dict) -> "PsychometricNetwork":
        if doc.get("format") != SNAPSHOT_FORMAT:
            raise ValueError(f"not a network snapshot: {doc.get('format')!r}")
        if doc.get("version") != SNAPSHOT_VERSION:
            raise ValueError(f"unsupported snapshot version {doc.get('version')!r}")
        scale = doc["scale"]
        train = doc["train"]
        layer_sizes = doc["layer_sizes"]
        est = cls(
            alpha=scale["alpha"],
            lapse=scale["lapse"],
            link_slope=scale["slope"],
            link_threshold=scale["threshold"],
            hidden=tuple(layer_sizes[1:-1]),
            eta0=train["eta0"],
            epochs=train["epochs"],
            decay_rate=train["decay_rate"],
            shrink_lambda=train["shrink_lambda"],
            perturb_sigma=train["perturb_sigma"],
            dropout_p=train["dropout_p"],
            input_noise_sigma=train["input_noise_sigma"],
            log_clamp=train["log_clamp"],
            normalization_freeze_trial=train["normalization_freeze_trial"],
            mc_samples=doc.get("mc_samples", 100),
            seed=doc.get("seed", 0),
        )
        est.network_ = nn.Network(layer_sizes, np.asarray(doc["params"]), doc.get("rng_seed", 0))
        norm = doc["normalization"]
        est.norm_mean_ = np.asarray(norm["mean"], dtype=np.float64)
        est.norm_std_ = np.asarray(norm["std"], dtype=np.float64)
        est.norm_frozen_ = bool(norm["frozen"])
        est.fisher_energy_ = None
        est.n_trials_ = int(doc.get("n_trials", 0))
        return est


class EnsemblePredictor:
    """Equal-weight average of several trained estimators.

    Members keep their own normalization statistics; the ensemble output at a
    native-unit stimulus is the arithmetic mean of the member probabilities.
    """

    def __init__(self, members):
        members = list(members)
        if not members:
            raise ValueError("ensemble needs at least one member")
        dims = {m.network_.dim for m in members}
        scales = {m.scale for m in members}
        if len(dims) != 1 or len(scales) != 1:
            raise ValueError("ensemble members must share input dimension and scale config")
        self.members = members

    @classmethod
    def from_snapshots(cls, snapshots) -> "EnsemblePredictor":
        return cls(PsychometricNetwork.from_snapshot(doc) for doc in snapshots)

    def response_probability(self, X):
        return np.mean([m.response_probability(X) for m in self.members], axis=0)


def ensemble_average(snapshots) -> EnsemblePredictor:
    """Build the equal-weight ensemble predictor from network snapshots."""
    return EnsemblePredictor.from_snapshots(snapshots)
