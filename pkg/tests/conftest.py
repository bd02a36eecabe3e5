import os

import numpy as np
import pytest
from hypothesis import settings

from kirchhoff import NonlinearityParams, ProblemConfig, SpectralOperator

# Same examples every run; set HYPOTHESIS_PROFILE=explore for fresh ones.
settings.register_profile("ci", derandomize=True, database=None)
settings.register_profile("explore")
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "ci"))


@pytest.fixture
def single_mode():
    return SpectralOperator([1.0])


def make_config(eigenvalues=(1.0,), u0=None, u1=None, epsilon=1e-3, gamma=1.0, p=0.0,
                horizon=1e4, tol=1e-9, coercive=None):
    op = SpectralOperator(np.asarray(eigenvalues, dtype=float), coercive=coercive)
    u0 = np.ones(op.n) if u0 is None else u0
    return ProblemConfig(op=op, u0=u0, u1=u1, epsilon=epsilon,
                         params=NonlinearityParams(gamma, p), horizon=horizon, tol=tol)


@pytest.fixture
def config_factory():
    return make_config
