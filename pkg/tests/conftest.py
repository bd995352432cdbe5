import os

# the small dense ops in the session loop degrade badly under BLAS thread
# oversubscription; simulations parallelize across processes instead
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("OMP_NUM_THREADS", "1")
os.environ.setdefault("MKL_NUM_THREADS", "1")

import numpy as np
import pytest

from psychonet import functions as pf
from psychonet.session import SessionConfig


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def tiny_session_config(dim=2, seed=7, trials_budget=None, **overrides):
    """A session config sized for fast unit tests."""
    from psychonet.acquisition import AcquisitionConfig, AcquisitionWeights
    from psychonet.network import TrainConfig

    defaults = dict(
        dim=dim,
        bounds=((-1.0, 1.0),) * dim,
        train=TrainConfig(epochs=15),
        acquisition=AcquisitionConfig(
            candidate_count=32,
            restarts=4,
            mc_samples=25,
            lookahead_subsample=16,
            refine_maxiter=5,
        ),
        seed=seed,
    )
    defaults.update(overrides)
    return SessionConfig(**defaults)


@pytest.fixture
def nv2d_detection():
    return pf.canonical("nv2d", pf.DETECTION)
