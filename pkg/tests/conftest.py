import logging

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rvmcg.grid import PhaseGrid

settings.register_profile(
    "rvmcg", deadline=None, max_examples=30, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("rvmcg")


@pytest.fixture(autouse=True)
def _quiet_solver_warnings():
    logging.getLogger("rvmcg").setLevel(logging.ERROR)
    yield


@pytest.fixture
def grid2v():
    return PhaseGrid(16, 2 * np.pi, (24, 24), 4.0)


@pytest.fixture
def grid1v():
    return PhaseGrid(64, 1.0, (64,), 4.0)
