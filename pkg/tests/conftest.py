import numpy as np
import pytest

from src.config import TestingConfig
from src.model.catalog import dgp_catalog
from src.services.simulate import simulate


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def config():
    return TestingConfig()


@pytest.fixture
def dgp1():
    return dgp_catalog("DGP1")


@pytest.fixture
def dgp1_panel(dgp1):
    return simulate(dgp1, 300, seed=7).panel
