"""Live-procedure state machine: record responses, retrain, propose the next
stimulus, track the information-energy convergence criterion, and round-trip
the whole state through a versioned document."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ._seeds import derive_seed
from .acquisition import (
    AcquisitionConfig,
    COMPONENTS,
    exploration_probability,
    maximize_acquisition,
)
from .estimator import PsychometricNetwork
from .network import PsychScale, TrainConfig
from .sampling import snap_to_grid, sobol_point
from .validation import check_bounds, in_bounds

DOCUMENT_FORMAT = "psychonet-session"
DOCUMENT_VERSION = 1

# per-dimension plateau of the windowed energy difference under a fully random
# observer; dimensions outside the table are log-linearly extrapolated
BASELINE_ENERGY_LEVELS = {2: 9e-4, 3: 7e-4, 4: 6e-4, 5: 5e-4, 6: 4e-4}


def baseline_energy_level(dim: int) -> float:
    if dim in BASELINE_ENERGY_LEVELS:
        return BASELINE_ENERGY_LEVELS[dim]
    dims = np.array(sorted(BASELINE_ENERGY_LEVELS))
    logs = np.log([BASELINE_ENERGY_LEVELS[d] for d in dims])
    slope, intercept = np.polyfit(dims, logs, 1)
    return float(np.exp(slope * dim + intercept))


@dataclass(frozen=True)
class ConvergenceConfig:
    """Windowed stopping rule: converged when baseline / window_mean >= snr_cutoff."""

    window: int = 15
    baseline_level: float | None = None
    snr_cutoff: float = 10.0

    def __post_init__(self):
        if self.window < 2:
            raise ValueError("window must be >= 2")
        if self.baseline_level is not None and self.baseline_level <= 0.0:
            raise ValueError("baseline_level must be positive")
        if self.snr_cutoff < 1.0:
            raise ValueError("snr_cutoff must be >= 1")

    def resolved_baseline(self, dim: int) -> float:
        if self.baseline_level is not None:
            return self.baseline_level
        return baseline_energy_level(dim)

    def to_dict(self):
        return {
            "window": self.window,
            "baseline_level": self.baseline_level,
            "snr_cutoff": self.snr_cutoff,
        }

    @classmethod
    def from_dict(cls, doc):
        return cls(**doc)


@dataclass(frozen=True)
class SessionConfig:
    dim: int
    bounds: tuple
    scale: PsychScale = field(default_factory=PsychScale)
    train: TrainConfig = field(default_factory=TrainConfig)
    acquisition: AcquisitionConfig = field(default_factory=AcquisitionConfig)
    convergence: ConvergenceConfig = field(default_factory=ConvergenceConfig)
    seed: int = 0
    grid_levels: int | None = None
    components: tuple = COMPONENTS

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        check_bounds(self.bounds, dim=self.dim)
        unknown = set(self.components) - set(COMPONENTS)
        if unknown:
            raise ValueError(f"unknown acquisition components: {sorted(unknown)}")
        if self.grid_levels is not None and self.grid_levels < 2:
            raise ValueError("grid_levels must be >= 2")

    @property
    def bounds_array(self):
        return check_bounds(self.bounds, dim=self.dim)

    @property
    def pure_random(self) -> bool:
        return len(self.components) == 0

    def to_dict(self):
        return {
            "dim": self.dim,
            "bounds": [list(b) for b in self.bounds],
            "scale": self.scale.to_dict(),
            "train": self.train.to_dict(),
            "acquisition": self.acquisition.to_dict(),
            "convergence": self.convergence.to_dict(),
            "seed": self.seed,
            "grid_levels": self.grid_levels,
            "components": list(self.components),
        }

    @classmethod
    def from_dict(cls, doc):
        doc = dict(doc)
        if "bounds" in doc:
            doc["bounds"] = tuple(tuple(b) for b in doc["bounds"])
        for key, sub in (
            ("scale", PsychScale),
            ("train", TrainConfig),
            ("acquisition", AcquisitionConfig),
            ("convergence", ConvergenceConfig),
        ):
            if key in doc and isinstance(doc[key], dict):
                doc[key] = sub.from_dict(doc[key])
        if "components" in doc:
            doc["components"] = tuple(doc["components"])
        return cls(**doc)


@dataclass
class ConvergenceReport:
    converged: bool
    snr: float | None
    window_mean: float | None


class SessionDocumentError(ValueError):
    """Raised for malformed or version-mismatched session documents."""


class Session:
    """One adaptive estimation run.

    The loop is deterministic given (config, response script): every
    stochastic step derives its seed from the config seed and the trial index,
    and the Sobol exploration cursor is part of the persisted state.
    """

    def __init__(self, config: SessionConfig):
        self.config = config
        self.estimator = PsychometricNetwork(
            alpha=config.scale.alpha,
            lapse=config.scale.lapse,
            link_slope=config.scale.slope,
            link_threshold=config.scale.threshold,
            eta0=config.train.eta0,
            epochs=config.train.epochs,
            decay_rate=config.train.decay_rate,
            shrink_lambda=config.train.shrink_lambda,
            perturb_sigma=config.train.perturb_sigma,
            dropout_p=config.train.dropout_p,
            input_noise_sigma=config.train.input_noise_sigma,
            log_clamp=config.train.log_clamp,
            normalization_freeze_trial=config.train.normalization_freeze_trial,
            mc_samples=config.acquisition.mc_samples,
            seed=config.seed,
        ).initialize(config.dim)
        self.X = np.empty((0, config.dim))
        self.y = np.empty(0)
        self.trial_count = 0
        self.fisher_history: list[float] = []
        self.sobol_index = 1
        self.pending_query = None
        self.pending_was_random = True
        self.converged = False
        self._advance_pending()

    # -- queries ------------------------------------------------------------

    @classmethod
    def new(cls, config: SessionConfig) -> "Session":
        return cls(config)

    def next_query(self):
        """The pending stimulus for the upcoming trial (idempotent)."""
        return np.array(self.pending_query), self.trial_count + 1, self.pending_was_random

    def _advance_pending(self):
        cfg = self.config
        t = self.trial_count + 1
        bounds = cfg.bounds_array
        explore = True
        if self.trial_count > 0 and not cfg.pure_random:
            coin = np.random.default_rng(derive_seed(cfg.seed, "explore", t)).random()
            explore = coin < exploration_probability(t, cfg.acquisition.exploration)
        if explore:
            x = sobol_point(self.sobol_index, cfg.dim, bounds)
            self.sobol_index += 1
        else:
            x, _ = maximize_acquisition(
                self.estimator,
                self.X,
                self.y,
                cfg.acquisition,
                bounds,
                derive_seed(cfg.seed, "acq", t),
                weights=cfg.acquisition.weights.masked(cfg.components),
            )
        if cfg.grid_levels is not None:
            x = snap_to_grid(x, cfg.grid_levels, bounds)
        self.pending_query = np.asarray(x, dtype=np.float64)
        self.pending_was_random = bool(explore)

    # -- responses ----------------------------------------------------------

    def record_response(self, x, y: int) -> "Session":
        """Append one (stimulus, response) pair, retrain, and stage the next query."""
        x = np.asarray(x, dtype=np.float64).ravel()
        if x.shape[0] != self.config.dim:
            raise ValueError(f"stimulus must have dimension {self.config.dim}")
        if not in_bounds(x, self.config.bounds_array):
            raise ValueError("stimulus outside the configured bounds")
        if int(y) not in (0, 1):
            raise ValueError("response must be 0 or 1")
        self.X = np.vstack([self.X, x])
        self.y = np.append(self.y, float(y))
        self.trial_count += 1
        self.estimator.fit(
            self.X, self.y, train_seed=derive_seed(self.config.seed, "train", self.trial_count)
        )
        self.fisher_history.append(float(self.estimator.fisher_energy_))
        self.converged = self.convergence().converged
        self._advance_pending()
        return self

    # -- convergence ----------------------------------------------------------

    def windowed_energy_difference(self) -> float | None:
        """Mean absolute successive difference of the trial energies over the
        last ``window`` differences, or None while too few trials exist."""
        window = self.config.convergence.window
        energies = np.asarray(self.fisher_history)
        if energies.shape[0] < window + 1:
            return None
        diffs = np.abs(np.diff(energies))
        return float(diffs[-window:].mean())

    def convergence(self) -> ConvergenceReport:
        has_both = bool(np.any(self.y == 0.0) and np.any(self.y == 1.0))
        window_mean = self.windowed_energy_difference()
        if window_mean is None:
            return ConvergenceReport(False, None, None)
        baseline = self.config.convergence.resolved_baseline(self.config.dim)
        snr = float("inf") if window_mean == 0.0 else baseline / window_mean
        converged = has_both and snr >= self.config.convergence.snr_cutoff
        return ConvergenceReport(converged, snr, window_mean)

    # -- persistence -----------------------------------------------------------

    def export(self) -> dict:
        report = self.convergence()
        return {
            "format": DOCUMENT_FORMAT,
            "version": DOCUMENT_VERSION,
            "config": self.config.to_dict(),
            "trial_count": self.trial_count,
            "records": [
                {"stimulus": [float(v) for v in xi], "response": int(yi)}
                for xi, yi in zip(self.X, self.y)
            ],
            "network": self.estimator.snapshot(),
            "fisher_history": [float(v) for v in self.fisher_history],
            "sobol_index": self.sobol_index,
            "pending_query": [float(v) for v in self.pending_query],
            "pending_was_random": self.pending_was_random,
            "converged": report.converged,
            "snr": report.snr,
            "window_mean": report.window_mean,
        }

    def export_json(self) -> str:
        return json.dumps(self.export(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def import_document(cls, doc) -> "Session":
        if isinstance(doc, str):
            try:
                doc = json.loads(doc)
            except json.JSONDecodeError as exc:
                raise SessionDocumentError(f"not valid JSON: {exc}") from exc
        try:
            if doc["format"] != DOCUMENT_FORMAT:
                raise SessionDocumentError(f"unknown document format {doc.get('format')!r}")
            if doc["version"] != DOCUMENT_VERSION:
                raise SessionDocumentError(f"unsupported document version {doc.get('version')!r}")
            config = SessionConfig.from_dict(doc["config"])
            session = cls.__new__(cls)
            session.config = config
            session.estimator = PsychometricNetwork.from_snapshot(doc["network"])
            records = doc["records"]
            session.X = np.array(
                [r["stimulus"] for r in records], dtype=np.float64
            ).reshape(len(records), config.dim)
            session.y = np.array([r["response"] for r in records], dtype=np.float64)
            session.trial_count = int(doc["trial_count"])
            session.fisher_history = [float(v) for v in doc["fisher_history"]]
            session.sobol_index = int(doc["sobol_index"])
            session.pending_query = np.asarray(doc["pending_query"], dtype=np.float64)
            session.pending_was_random = bool(doc["pending_was_random"])
            session.converged = bool(doc["converged"])
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, SessionDocumentError):
                raise
            raise SessionDocumentError(f"malformed session document: {exc}") from exc
        if session.trial_count != session.X.shape[0]:
            raise SessionDocumentError("trial_count does not match the record list")
        return session
