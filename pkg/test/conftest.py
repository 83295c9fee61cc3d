"""
Pytest configuration file, setup global pytest fixtures and functions here.
"""
import pytest

from scanspectra.common import forge
from scanspectra.markov.models import (build_hardcore, build_ising, complete_graph, cycle_graph, edgeless_graph,
                                       path_graph)
from scanspectra.markov.operators import build_site_kernels


@pytest.fixture(scope='session')
def config():
    return forge.get_config()


@pytest.fixture
def clean_config_cache():
    """Forget configurations loaded from temporary files once the test is over."""
    before = set(forge.config_cache)
    yield forge.config_cache
    for key in set(forge.config_cache) - before:
        forge.config_cache.pop(key, None)


@pytest.fixture(scope='session')
def hardcore_k2():
    # Support in index order: 00, 10, 01
    return build_hardcore(complete_graph(2), 1.0)


@pytest.fixture(scope='session')
def hardcore_k2_kernels(hardcore_k2):
    return build_site_kernels(hardcore_k2)


@pytest.fixture(scope='session')
def hardcore_k3_kernels():
    return build_site_kernels(build_hardcore(complete_graph(3), 1.0))


@pytest.fixture(scope='session')
def product2_kernels():
    # beta = h = 0 on the empty graph is the uniform product measure on {0, 1}^2
    return build_site_kernels(build_ising(edgeless_graph(2), 0.0, 0.0))


@pytest.fixture(scope='session')
def ising_path3_kernels():
    return build_site_kernels(build_ising(path_graph(3), 0.5, 0.3))


@pytest.fixture(scope='session')
def ising_cycle4_kernels():
    return build_site_kernels(build_ising(cycle_graph(4), -1.0, 0.0))
