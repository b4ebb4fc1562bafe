import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from adoptnet.amplification import (
    amplification_by_integration,
    amplification_factor,
    amplification_factors,
    amplification_report,
    decompose,
    rank_descending,
    validate_against_simulation,
)
from adoptnet.dynamics import ModelParams, integrate
from adoptnet.errors import IndefiniteOperatorError
from adoptnet.graph import SpatialNetwork, build_operators, generate_network

from conftest import BASELINE, FIG


def test_no_channels_gives_one(ops30):
    np.testing.assert_allclose(amplification_factors(ops30, ModelParams(0, 0, 0, 0.15)), 1.0, rtol=1e-14)


def test_two_node_example(two_node_ops):
    p = ModelParams(0.0, 1.0, 0.0, 1.0)
    assert amplification_factor(two_node_ops, p, 0) == pytest.approx(1.5, rel=1e-14)
    assert amplification_factor(two_node_ops, p, 1) == pytest.approx(1.5, rel=1e-14)


def test_matches_ode_oracle():
    # independent path: adaptive ODE for every impulse with the integral as an extra state
    ops = build_operators(generate_network("scale_free", 12, {"m": 2}, seed=4))
    A = BASELINE.drift_operator(ops) - BASELINE.kappa * np.eye(12)

    def rhs(t, y):
        X = y[:144].reshape(12, 12)
        return np.r_[(A @ X).ravel(), X.ravel()]

    sol = solve_ivp(rhs, (0, 60 / BASELINE.kappa), np.r_[np.eye(12).ravel(), np.zeros(144)],
                    method="LSODA", rtol=1e-11, atol=1e-13)
    acc = sol.y[144:, -1].reshape(12, 12)
    np.testing.assert_allclose(amplification_factors(ops, BASELINE), acc.sum(axis=0) / np.diag(acc), rtol=1e-6)


def test_matches_integration_oracle(ops30):
    np.testing.assert_allclose(amplification_by_integration(ops30, BASELINE), amplification_factors(ops30, BASELINE),
                               rtol=1e-6)


def test_indefinite_operator(ops30):
    with pytest.raises(IndefiniteOperatorError):
        amplification_factors(ops30, BASELINE.with_(lambda_x=40.0, dt=1e-4))


def test_decomposition_single_channel(ops30):
    p = BASELINE.with_(nu_n=0.0, lambda_x=0.0)
    for i in (0, 13):
        d = decompose(ops30, p, i)
        assert d.network == 0.0 and d.interaction == 0.0
        assert abs(d.total - 1 - d.spatial) <= 1e-10


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32), nu_s=st.floats(0, 2), nu_n=st.floats(0, 2), lam=st.floats(-1, 1),
       kappa=st.floats(0.05, 1.0))
def test_decomposition_identity(seed, nu_s, nu_n, lam, kappa):
    ops = build_operators(generate_network("random", 15, {"p": 0.3}, seed=seed))
    rep = amplification_report(ops, ModelParams(nu_s, nu_n, lam, kappa, dt=1e-3))
    np.testing.assert_allclose(1 + rep.spatial + rep.network + rep.interaction, rep.total, atol=1e-10)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32), nu_s=st.floats(0, 2), nu_n=st.floats(0, 2), kappa=st.floats(0.01, 1.0))
def test_at_least_one_without_interaction(seed, nu_s, nu_n, kappa):
    ops = build_operators(generate_network("clustered", 12, {"k": 2}, seed=seed))
    assert amplification_factors(ops, ModelParams(nu_s, nu_n, 0.0, kappa)).min() >= 1 - 1e-12


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**32))
def test_permutation_equivariance(seed):
    net = generate_network("random", 14, {"p": 0.3}, seed=seed)
    perm = np.random.default_rng(seed).permutation(14)
    pnet = SpatialNetwork(net.coords[perm], net.adjacency[np.ix_(perm, perm)],
                          net.spatial_weights[np.ix_(perm, perm)])
    a = amplification_factors(build_operators(net), BASELINE)
    b = amplification_factors(build_operators(pnet), BASELINE)
    np.testing.assert_allclose(b, a[perm], rtol=1e-10)


def test_impulse_size_irrelevant(ops30):
    p = BASELINE.with_(t_end=200.0, dt=0.01)
    ratios = []
    for mass in (1.0, 7.3):
        tau0 = np.zeros(30)
        tau0[5] = mass
        acc = integrate(ops30, p, None, tau0, clamp=False).states[:-1].sum(axis=0)
        ratios.append(acc.sum() / acc[5])
    assert ratios[0] == pytest.approx(ratios[1], rel=1e-12)


def test_report_and_ranking(tmp_path, ops30):
    rep = amplification_report(ops30, BASELINE)
    assert sorted(rep.rank.tolist()) == list(range(1, 31))
    assert np.all(np.diff(rep.total[rep.order]) <= 0)
    assert rep.top(3).tolist() == rep.order[:3].tolist()
    lines = rep.to_csv(tmp_path / "a.csv").read_text().splitlines()
    assert lines[0] == "node,total,spatial,network,interaction,rank"
    assert len(lines) == 31
    assert float(lines[1].split(",")[1]) == rep.total[0]


def test_rank_ties_go_to_lower_index():
    assert rank_descending(np.array([2.0, 3.0, 2.0, 1.0])).tolist() == [2, 1, 3, 4]


def test_truncated_horizon_lowers_correlation():
    ops = build_operators(generate_network("random", 20, {"p": 0.2}, seed=2))
    long = validate_against_simulation(ops, FIG).correlation
    short = validate_against_simulation(ops, FIG, t_end=1 / FIG.kappa).correlation
    assert long > 0.999 and short < long
