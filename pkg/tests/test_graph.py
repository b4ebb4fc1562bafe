import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adoptnet.errors import ConfigError, ConstructionError
from adoptnet.graph import (
    Gaussian,
    Knn,
    SpatialNetwork,
    build_operators,
    generate_network,
    knn_adjacency,
    laplacian,
    load_network,
    parse_kernel,
    save_network,
    spatial_weights,
    transition_table,
)

from conftest import path_network

KINDS = [("random", {"p": 0.2}), ("scale_free", {"m": 2}), ("clustered", {"k": 3})]


def test_two_node_random_complete():
    net = generate_network("random", 2, {"p": 1.0}, seed=0)
    assert net.adjacency.tolist() == [[0.0, 1.0], [1.0, 0.0]]


def test_scale_free_degree_sum():
    net = generate_network("scale_free", 30, {"m": 2}, seed=7)
    # brute-force edge count over the upper triangle
    edges = sum(1 for i in range(30) for j in range(i + 1, 30) if net.adjacency[i, j] > 0)
    assert 2 * edges == 114
    assert net.degree.sum() == 114


def test_clustered_min_degree():
    net = generate_network("clustered", 10, {"k": 3}, seed=1)
    c = net.coords
    for i in range(10):
        d = np.hypot(*(c - c[i]).T)
        d[i] = np.inf
        nearest = np.argsort(d, kind="stable")[:3]
        assert all(net.adjacency[i, j] > 0 for j in nearest)
    assert (net.adjacency > 0).sum(axis=1).min() >= 3


def test_gaussian_saturates():
    net = SpatialNetwork(np.array([[0.0, 0.0], [0.3, 0.4]]), np.array([[0.0, 1.0], [1.0, 0.0]]),
                         np.zeros((2, 2)))
    ops = build_operators(net, Gaussian(1e9))
    np.testing.assert_allclose(ops.L_s, [[-1.0, 1.0], [1.0, -1.0]], atol=1e-12)


def test_path_laplacian_spectrum():
    ops = build_operators(path_network(3))
    np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(ops.L_n)), [-3.0, -1.0, 0.0], atol=1e-12)


def test_knn_ties_break_by_index():
    coords = np.zeros((4, 2))
    W = knn_adjacency(coords, 1)
    # all points coincide: each picks the lowest other index
    assert W[0, 1] == 1 and W[1, 0] == 1 and W[2, 0] == 1 and W[3, 0] == 1
    assert np.array_equal(W, W.T)


def test_kernel_parsing():
    assert parse_kernel("knn:5") == Knn(5)
    assert parse_kernel("gaussian:0.2") == Gaussian(0.2)
    assert str(parse_kernel(Gaussian(0.2))) == "gaussian:0.2"
    for bad in ("gaussian:0", "gaussian:-1", "knn:0", "cubic:2", "knn:x"):
        with pytest.raises(ConfigError):
            parse_kernel(bad)


@pytest.mark.parametrize("kind,params", [("random", {"p": 0.0}), ("random", {"p": 1.5}),
                                         ("scale_free", {"m": 0}), ("clustered", {"k": 0})])
def test_bad_params(kind, params):
    with pytest.raises(ConfigError):
        generate_network(kind, 10, params, seed=0)


def test_bad_kind_and_size():
    with pytest.raises(ConfigError):
        generate_network("lattice", 10)
    with pytest.raises(ConfigError):
        generate_network("random", 1)


def test_connectivity_failure_names_params():
    with pytest.raises(ConstructionError, match="random"):
        generate_network("random", 60, {"p": 0.001}, seed=0)


def test_network_validation():
    coords = np.zeros((2, 2))
    with pytest.raises(ConfigError):
        SpatialNetwork(coords, np.array([[0.0, 1.0], [0.5, 0.0]]), np.zeros((2, 2)))
    with pytest.raises(ConfigError):
        SpatialNetwork(coords, np.array([[1.0, 1.0], [1.0, 0.0]]), np.zeros((2, 2)))
    with pytest.raises(ConfigError):
        SpatialNetwork(coords, np.array([[0.0, -1.0], [-1.0, 0.0]]), np.zeros((2, 2)))
    with pytest.raises(ConfigError):
        SpatialNetwork(np.array([[0.0, np.nan], [1.0, 1.0]]), np.zeros((2, 2)), np.zeros((2, 2)))


def test_network_is_immutable(net30):
    with pytest.raises(ValueError):
        net30.adjacency[0, 1] = 5.0


@pytest.mark.parametrize("kind,params", KINDS)
def test_generation_reproducible(kind, params):
    a = generate_network(kind, 25, params, seed=11)
    b = generate_network(kind, 25, params, seed=11)
    assert a.adjacency.tobytes() == b.adjacency.tobytes()
    assert a.coords.tobytes() == b.coords.tobytes()
    assert a.is_connected()


@settings(max_examples=25, deadline=None)
@given(kind=st.sampled_from(KINDS), n=st.integers(5, 35), seed=st.integers(0, 2**32),
       gaussian=st.booleans())
def test_operator_invariants(kind, n, seed, gaussian):
    net = generate_network(kind[0], n, kind[1], seed=seed)
    ops = build_operators(net, Gaussian(0.3) if gaussian else Knn(4))
    for L in (ops.L_s, ops.L_n):
        assert np.abs(L.sum(axis=1)).max() <= 1e-12
        assert np.array_equal(L, L.T)
        assert np.linalg.eigvalsh(-L).min() >= -1e-10
    assert np.allclose(ops.L_x, ops.L_x.T, atol=1e-12)
    assert ops.interaction_scale >= 1.0
    assert np.all(net.coords >= 0) and np.all(net.coords <= 1)


def test_interaction_operator_definition(ops30):
    P = 0.5 * (ops30.L_s @ ops30.L_n + ops30.L_n @ ops30.L_s)
    np.testing.assert_allclose(ops30.L_x * ops30.interaction_scale, P, atol=1e-12)
    assert ops30.interaction_scale == pytest.approx(max(1.0, np.abs(np.linalg.eigvalsh(P)).max()), rel=1e-9)


def test_laplacian_action():
    W = np.array([[0, 2.0, 0], [2.0, 0, 1.0], [0, 1.0, 0]])
    tau = np.array([0.1, 0.5, 0.2])
    expected = [sum(W[i, j] * (tau[j] - tau[i]) for j in range(3)) for i in range(3)]
    np.testing.assert_allclose(laplacian(W) @ tau, expected)


def test_csv_round_trip(tmp_path, net30):
    edges, coords = save_network(net30, tmp_path)
    assert edges.read_text().splitlines()[0] == "i,j,weight"
    assert coords.read_text().splitlines()[0] == "i,x,y"
    back = load_network(edges, coords)
    assert np.array_equal(back.adjacency, net30.adjacency)
    assert np.array_equal(back.coords, net30.coords)
    assert np.array_equal(back.spatial_weights, net30.spatial_weights)


def test_load_rejects_bad_ids(tmp_path):
    (tmp_path / "e.csv").write_text("i,j,weight\n0,5,1.0\n")
    (tmp_path / "c.csv").write_text("i,x,y\n0,0.1,0.2\n1,0.3,0.4\n")
    with pytest.raises(ConfigError):
        load_network(tmp_path / "e.csv", tmp_path / "c.csv")


def test_transition_table():
    G = np.array([[0, 1.0, 3.0], [1.0, 0, 0], [3.0, 0, 0]])
    nbr, cum, deg = transition_table(G)
    assert deg.tolist() == [2, 1, 1]
    assert nbr[0, :2].tolist() == [1, 2]
    np.testing.assert_allclose(cum[0, :2], [0.25, 1.0])
    assert cum[1, 0] == 1.0


def test_spatial_weights_symmetric_zero_diagonal():
    coords = np.random.default_rng(3).random((12, 2))
    for kernel in ("knn:3", "gaussian:0.25"):
        W = spatial_weights(coords, kernel)
        assert np.array_equal(W, W.T) and np.all(np.diag(W) == 0) and np.all(W >= 0)
