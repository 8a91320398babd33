import numpy as np
import pytest

from bdagar.config import SimulationTruth
from bdagar.data import simulate_dataset
from bdagar.graph import grid_graph


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False,
                     help='run slow sampler experiments')


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: long-running MCMC experiment')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip = pytest.mark.skip(reason='needs --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def rng():
    return np.random.default_rng(20200)


@pytest.fixture
def grid3():
    return grid_graph(3, 3)


@pytest.fixture
def truth():
    return SimulationTruth(
        beta1=[1.0, 0.5], beta2=[-1.0, 0.3], sigma2=(0.5, 0.5), tau=(2.0, 2.0),
        rho=(0.6, 0.4), eta=(0.5, 0.2), seed=11, disease_names=('a', 'b'))


@pytest.fixture
def small_dataset(grid3, truth):
    dataset, _ = simulate_dataset(grid3, truth)
    return dataset
