"""Monte Carlo benchmark harness: full simulated sessions against synthetic
observers, per-trial error series, batch aggregation, and the acquisition
weight search."""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from threadpoolctl import threadpool_limits

from . import functions as pf
from ._seeds import derive_seed
from .acquisition import COMPONENTS, AcquisitionConfig, AcquisitionWeights
from .metrics import auc, brier, default_mu_star, make_test_set, rmse
from .network import PsychScale
from .session import ConvergenceConfig, Session, SessionConfig
from .validation import SingularKernelError, check_bounds


@dataclass(frozen=True)
class ConstantObserver:
    """Degenerate observer answering with a fixed success probability.

    ``random`` in the CLI: the coin-flip observer used to calibrate the
    information-energy baseline.
    """

    probability: float = 0.5
    bounds: tuple = ((-1.0, 1.0), (-1.0, 1.0))
    alpha: float = 0.0
    lapse: float = 0.0

    kind = "random"

    @property
    def dim(self):
        return len(self.bounds)

    def domain(self):
        return check_bounds(self.bounds)

    def evaluate(self, X):
        X = np.atleast_2d(X)
        return np.full(X.shape[0], self.probability)

    def evaluate_one(self, x):
        return self.probability

    def to_dict(self):
        return {
            "kind": self.kind,
            "probability": self.probability,
            "bounds": [list(b) for b in self.bounds],
            "alpha": self.alpha,
            "lapse": self.lapse,
        }


def resolve_function(name: str, mode: str = pf.DETECTION, dim: int | None = None):
    """Function registry used by the CLI: synthetic families plus ``random``."""
    if name == "random":
        k = dim or 2
        return ConstantObserver(bounds=((-1.0, 1.0),) * k)
    return pf.canonical(name, mode, dim=dim)


@dataclass(frozen=True)
class BenchmarkConfig:
    function: object
    runs: int = 1
    trials_per_run: int = 150
    seed: int = 0
    weights: AcquisitionWeights = field(default_factory=AcquisitionWeights)
    components: tuple = COMPONENTS
    grid_levels: int | None = None
    test_set_size: int | None = None
    mc_samples: int = 100
    convergence: ConvergenceConfig = field(default_factory=ConvergenceConfig)

    def __post_init__(self):
        if self.runs < 1 or self.trials_per_run < 1:
            raise ValueError("runs and trials_per_run must be >= 1")

    def session_config(self, run_seed: int) -> SessionConfig:
        fn = self.function
        return SessionConfig(
            dim=fn.dim,
            bounds=tuple(tuple(b) for b in np.asarray(fn.domain())),
            scale=PsychScale(alpha=fn.alpha, lapse=fn.lapse),
            acquisition=AcquisitionConfig(weights=self.weights, mc_samples=self.mc_samples),
            convergence=self.convergence,
            seed=run_seed,
            grid_levels=self.grid_levels,
            components=self.components,
        )


@dataclass
class MetricSeries:
    """Per-trial error series for one simulated run."""

    run_index: int
    rmse: list = field(default_factory=list)
    brier: list = field(default_factory=list)
    fisher: list = field(default_factory=list)
    converged: list = field(default_factory=list)
    convergence_trial: int | None = None
    error: str | None = None

    @property
    def auc_rmse(self) -> float:
        return auc(self.rmse)

    @property
    def auc_brier(self) -> float:
        return auc(self.brier)


def run_simulation(cfg: BenchmarkConfig, run_index: int) -> MetricSeries:
    """One full session against the simulated observer; deterministic per
    (cfg, run_index). On a singular lookahead kernel the partial series is
    returned with an error marker."""
    # single-threaded BLAS: the session's many small dense ops degrade badly
    # under thread oversubscription, and batches parallelize across processes
    with threadpool_limits(limits=1):
        return _run_simulation(cfg, run_index)


def _run_simulation(cfg: BenchmarkConfig, run_index: int) -> MetricSeries:
    fn = cfg.function
    run_seed = derive_seed(cfg.seed, "run", run_index)
    session = Session.new(cfg.session_config(run_seed))
    test_X = make_test_set(fn.domain(), size=cfg.test_set_size, seed=derive_seed(run_seed, "test"))
    truth = fn.evaluate(test_X)
    mu_star = default_mu_star(fn.alpha)

    series = MetricSeries(run_index=run_index)
    for t in range(1, cfg.trials_per_run + 1):
        x, _, _ = session.next_query()
        rng = np.random.default_rng(derive_seed(run_seed, "obs", t))
        y = pf.sample_response(fn, x, rng)
        try:
            session.record_response(x, y)
        except SingularKernelError as exc:
            series.error = str(exc)
            break
        predicted = session.estimator.response_probability(test_X)
        mean, std = session.estimator.predict_uncertainty(
            test_X, seed=derive_seed(run_seed, "unc", t)
        )
        series.rmse.append(rmse(predicted, truth))
        series.brier.append(brier(mean, std, truth, mu_star))
        series.fisher.append(session.fisher_history[-1])
        series.converged.append(session.converged)
        if session.converged and series.convergence_trial is None:
            series.convergence_trial = t
    return series


@dataclass
class BatchReport:
    config: BenchmarkConfig
    series: list

    @property
    def auc_rmse_values(self):
        return np.array([s.auc_rmse for s in self.series])

    @property
    def auc_brier_values(self):
        return np.array([s.auc_brier for s in self.series])

    def aggregate(self) -> dict:
        def mean_sem(values):
            mean = float(np.mean(values))
            sem = float(np.std(values, ddof=1) / np.sqrt(len(values))) if len(values) > 1 else 0.0
            return {"mean": mean, "sem": sem}

        return {
            "runs": len(self.series),
            "auc_rmse": mean_sem(self.auc_rmse_values),
            "auc_brier": mean_sem(self.auc_brier_values),
            "convergence_trials": [s.convergence_trial for s in self.series],
            "errors": [s.error for s in self.series if s.error],
        }


def run_batch(cfg: BenchmarkConfig, jobs: int | None = None) -> BatchReport:
    """``cfg.runs`` independent simulations, optionally in parallel processes."""
    indices = list(range(cfg.runs))
    if jobs is None:
        jobs = min(cfg.runs, os.cpu_count() or 1)
    if jobs > 1 and cfg.runs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            series = list(pool.map(run_simulation, [cfg] * cfg.runs, indices))
    else:
        series = [run_simulation(cfg, i) for i in indices]
    return BatchReport(config=cfg, series=series)


def weight_search(base_cfg: BenchmarkConfig, grid, jobs: int | None = None):
    """Evaluate weight tuples with run_batch; rank ascending by mean AUC of RMSE."""
    rows = []
    for tup in grid:
        weights = AcquisitionWeights(*tup)
        report = run_batch(replace(base_cfg, weights=weights), jobs=jobs)
        agg = report.aggregate()
        rows.append(
            {
                "weights": list(weights.as_array()),
                "auc_rmse_mean": agg["auc_rmse"]["mean"],
                "auc_rmse_sem": agg["auc_rmse"]["sem"],
                "auc_brier_mean": agg["auc_brier"]["mean"],
            }
        )
    rows.sort(key=lambda row: row["auc_rmse_mean"])
    return rows


# ---------------------------------------------------------------------------
# emission


def write_series_csv(path, series_list):
    """One row per (run, trial): run_id, trial, rmse, brier, fisher_energy, converged."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["run_id", "trial", "rmse", "brier", "fisher_energy", "converged"])
        for series in series_list:
            for t in range(len(series.rmse)):
                writer.writerow(
                    [
                        series.run_index,
                        t + 1,
                        repr(series.rmse[t]),
                        repr(series.brier[t]),
                        repr(series.fisher[t]),
                        int(series.converged[t]),
                    ]
                )


def batch_summary(report: BatchReport) -> dict:
    cfg = report.config
    return {
        "function": cfg.function.to_dict(),
        "runs": cfg.runs,
        "trials_per_run": cfg.trials_per_run,
        "seed": cfg.seed,
        "weights": list(cfg.weights.as_array()),
        "components": list(cfg.components),
        "grid_levels": cfg.grid_levels,
        "per_run_auc_rmse": [s.auc_rmse for s in report.series],
        "per_run_auc_brier": [s.auc_brier for s in report.series],
        "aggregate": report.aggregate(),
    }


def write_batch_outputs(report: BatchReport, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    write_series_csv(os.path.join(out_dir, "runs.csv"), report.series)
    with open(os.path.join(out_dir, "summary.json"), "w") as handle:
        json.dump(batch_summary(report), handle, indent=2, sort_keys=True)
    return out_dir
