"""Adaptive psychometric-function estimation with a neural estimator.

A feedforward network estimates the response-probability surface; stimuli are
chosen by maximizing a four-component acquisition score, and an
information-energy stopping rule signals convergence. The package ships a
simulation benchmark harness, a CLI, and an HTTP service for live sessions.
"""

from .acquisition import (
    AcquisitionConfig,
    AcquisitionWeights,
    CandidateScore,
    ExplorationSchedule,
    combine,
    exploration_probability,
    maximize_acquisition,
    ntk_lookahead_predict,
    parzen_density,
)
from .estimator import EnsemblePredictor, PsychometricNetwork, ensemble_average
from .network import PsychScale, TrainConfig, he_init, train_trial, weibull_squash
from .session import ConvergenceConfig, Session, SessionConfig, baseline_energy_level
from .simulate import BenchmarkConfig, MetricSeries, run_batch, run_simulation, weight_search
from .validation import DomainError, EmptyDatasetError, SingularKernelError

__all__ = [
    "AcquisitionConfig",
    "AcquisitionWeights",
    "BenchmarkConfig",
    "CandidateScore",
    "ConvergenceConfig",
    "DomainError",
    "EmptyDatasetError",
    "EnsemblePredictor",
    "ExplorationSchedule",
    "MetricSeries",
    "PsychometricNetwork",
    "PsychScale",
    "Session",
    "SessionConfig",
    "SingularKernelError",
    "TrainConfig",
    "baseline_energy_level",
    "combine",
    "ensemble_average",
    "exploration_probability",
    "he_init",
    "maximize_acquisition",
    "ntk_lookahead_predict",
    "parzen_density",
    "run_batch",
    "run_simulation",
    "train_trial",
    "weibull_squash",
    "weight_search",
]

__version__ = "0.1.0"
