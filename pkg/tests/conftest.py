import numpy as np
import pytest

from adoptnet import _backend
from adoptnet.dynamics import ModelParams
from adoptnet.graph import build_operators, generate_network

BASELINE = ModelParams(0.5, 0.8, 0.3, 0.15)
FIG = ModelParams(0.8, 1.2, 0.4, 0.1)

BACKENDS = _backend.available()


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture(scope="session")
def net30():
    return generate_network("random", 30, {"p": 0.15}, seed=0)


@pytest.fixture(scope="session")
def ops30(net30):
    return build_operators(net30)


@pytest.fixture(scope="session")
def two_node_ops():
    from adoptnet.graph import SpatialNetwork

    net = SpatialNetwork(np.array([[0.0, 0.0], [1.0, 0.0]]), np.array([[0.0, 1.0], [1.0, 0.0]]), np.zeros((2, 2)))
    return build_operators(net)


def path_network(n=3):
    from adoptnet.graph import SpatialNetwork

    G = np.zeros((n, n))
    for i in range(n - 1):
        G[i, i + 1] = G[i + 1, i] = 1.0
    coords = np.c_[np.linspace(0, 1, n), np.zeros(n)]
    return SpatialNetwork(coords, G, np.zeros((n, n)))
