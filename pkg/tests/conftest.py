import numpy as np
import pytest

from harnack_lab import generators, graph


@pytest.fixture(scope="session")
def box2_10():
    return generators.lattice_box(2, 10)


@pytest.fixture(scope="session")
def box2_24():
    return generators.lattice_box(2, 24)


@pytest.fixture(scope="session")
def path_graph():
    """Unit path 0-1-...-10."""
    return graph.build_graph([(i, i + 1, 1.0) for i in range(10)])


@pytest.fixture()
def rng():
    return np.random.default_rng(20260810)
