import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adoptnet.dynamics import ModelParams, SourceSchedule, Trajectory, Window, integrate, ou_stationary_variance, steady_state
from adoptnet.errors import ConfigError, IndefiniteOperatorError, StabilityError
from adoptnet.graph import build_operators, generate_network

from conftest import BASELINE


def test_free_decay(ops30, backend):
    p = ModelParams(0.0, 0.0, 0.0, 0.15, dt=0.01, t_end=10.0)
    traj = integrate(ops30, p, None, np.full(30, 0.6), backend=backend)
    # explicit Euler: exactly c (1 - kappa dt)^k
    k = np.arange(len(traj.times))
    np.testing.assert_allclose(traj.states[:, 3], 0.6 * (1 - 0.15 * 0.01) ** k, rtol=1e-12)
    assert np.abs(traj.states[:, 3] - 0.6 * np.exp(-0.15 * traj.times)).max() < 0.6 * 0.15 * 0.01


def test_half_life(ops30):
    p = ModelParams(0.0, 0.0, 0.0, 0.15, dt=0.01, t_end=10.0)
    traj = integrate(ops30, p, None, np.ones(30))
    t_half = traj.times[np.argmax(traj.states[:, 0] <= 0.5)]
    assert abs(t_half - math.log(2) / 0.15) <= 0.01


def test_constant_source_fixed_point(ops30):
    p = ModelParams(0.0, 0.0, 0.0, 0.5, dt=0.01, t_end=60.0)
    S = np.linspace(0.0, 1.0, 30)
    traj = integrate(ops30, p, SourceSchedule.constant(S), np.zeros(30))
    np.testing.assert_allclose(traj.terminal, np.minimum(1.0, S / 0.5), atol=1e-6)


def test_steady_state_examples(ops30, two_node_ops):
    S = np.random.default_rng(0).uniform(0, 0.1, 30)
    np.testing.assert_allclose(steady_state(ops30, ModelParams(0, 0, 0, 0.15), S), S / 0.15, rtol=1e-14)
    np.testing.assert_allclose(steady_state(two_node_ops, ModelParams(0, 1, 0, 1), [1, 0]), [2 / 3, 1 / 3],
                               rtol=1e-14)


def test_katz_shapiro_form(net30, ops30):
    p = ModelParams(0.0, 0.8, 0.0, 0.15)
    S = np.random.default_rng(1).uniform(0, 0.05, 30)
    tau = steady_state(ops30, p, S)
    G = net30.adjacency
    np.testing.assert_allclose(tau, (S + 0.8 * G @ tau) / (0.15 + 0.8 * G.sum(axis=1)), rtol=1e-10)


def test_steady_state_matches_long_integration(ops30):
    S = np.random.default_rng(2).uniform(0, 0.01, 30)
    tau = steady_state(ops30, BASELINE, S)
    assert tau.min() >= 0 and tau.max() <= 1
    traj = integrate(ops30, BASELINE.with_(t_end=50 / BASELINE.kappa), SourceSchedule.constant(S), np.zeros(30))
    assert np.abs(traj.terminal - tau).max() < 1e-4


def test_steady_state_indefinite(ops30):
    with pytest.raises(IndefiniteOperatorError) as exc:
        steady_state(ops30, ModelParams(0.5, 0.8, 40.0, 0.15, dt=1e-4), np.ones(30))
    assert exc.value.min_eigenvalue <= 0


def test_stability_error_reports_bound(ops30):
    p = BASELINE.with_(dt=1.0)
    with pytest.raises(StabilityError) as exc:
        integrate(ops30, p)
    assert exc.value.dt_max == pytest.approx(p.max_stable_dt(ops30))
    assert isinstance(exc.value, ConfigError)


@pytest.mark.parametrize("bad", [dict(kappa=0.0), dict(nu_s=-1.0), dict(dt=0.0), dict(t_end=-1.0),
                                 dict(kappa=float("nan"))])
def test_param_validation(bad):
    with pytest.raises(ConfigError):
        BASELINE.with_(**bad)


def test_zero_stays_zero(ops30, backend):
    traj = integrate(ops30, BASELINE.with_(t_end=5.0), None, np.zeros(30), backend=backend)
    assert not traj.states.any()


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31), intensity=st.floats(0.0, 3.0), duration=st.floats(0.1, 5.0))
def test_clamped_bounds_and_monotone_time(ops30, seed, intensity, duration):
    rng = np.random.default_rng(seed)
    tau0 = rng.random(30)
    src = SourceSchedule.shock(rng.choice(30, 6, replace=False), intensity, duration)
    traj = integrate(ops30, BASELINE.with_(t_end=6.0), src, tau0, record_every=7)
    assert traj.states.min() >= 0.0 and traj.states.max() <= 1.0
    assert np.all(np.diff(traj.times) > 0)
    assert len(traj.events.t) == 0


def test_hazard_limit_exact(ops30):
    p = ModelParams(0.0, 0.0, 0.0, 0.15, t_end=10.0)
    tau0 = np.random.default_rng(4).random(30)
    src = SourceSchedule.shock([0, 5, 9], 0.2, 3.0)
    a = integrate(ops30, p, src, tau0)
    tau0[7] = 0.99
    b = integrate(ops30, p, src, tau0)
    keep = np.arange(30) != 7
    assert np.array_equal(a.states[:, keep], b.states[:, keep])


def test_source_schedule():
    src = SourceSchedule([Window(0.0, 4.0, (0, 1), 0.2), Window(2.0, 3.0, (1,), 0.5)])
    np.testing.assert_allclose(src.rate(2.5, 3), [0.2, 0.7, 0.0])
    np.testing.assert_allclose(src.rate(4.0, 3), [0.0, 0.0, 0.0])
    assert src.total_intensity(1.0) == pytest.approx(0.4)
    assert src.integral() == pytest.approx(4 * 0.4 + 0.5)
    assert src.integral(upto=1.0) == pytest.approx(0.4)
    assert src.end_time == 4.0
    assert src.scaled(2.0).integral() == pytest.approx(2 * src.integral())
    with pytest.raises(ConfigError):
        SourceSchedule([Window(3.0, 1.0, (0,), 0.1)])
    with pytest.raises(ConfigError):
        SourceSchedule([Window(0.0, 1.0, (0,), -0.1)])
    with pytest.raises(ConfigError):
        src.validate(1)


def test_source_step_alignment(ops30):
    # a window of length 1 with dt 0.01 is active for exactly 100 steps
    p = ModelParams(0.0, 0.0, 0.0, 0.15, dt=0.01, t_end=2.0)
    traj = integrate(ops30, p, SourceSchedule.shock([0], 1.0, 1.0), np.zeros(30), clamp=False)
    decay = 1 - 0.15 * 0.01
    expected = 0.01 * sum(decay ** m for m in range(100)) * decay ** 100
    assert traj.terminal[0] == pytest.approx(expected, rel=1e-12)


def test_trajectory_csv(tmp_path, ops30):
    traj = integrate(ops30, BASELINE.with_(t_end=0.05), None, np.full(30, 0.5))
    path = traj.to_csv(tmp_path / "traj.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "t,node,tau"
    assert len(lines) == 1 + len(traj.times) * 30
    t, node, tau = lines[31].split(",")
    assert float(t) == traj.times[1] and int(node) == 0 and float(tau) == traj.states[1, 0]
    ev = traj.events.to_csv(tmp_path / "ev.csv")
    assert ev.read_text().splitlines() == ["t,node,kind,regime"]


def test_trajectory_at(ops30):
    traj = integrate(ops30, BASELINE.with_(t_end=1.0), None, np.full(30, 0.5))
    assert np.array_equal(traj.at(0.5), traj.states[50])


@pytest.mark.parametrize("kappa,sigma", [(0.5, 1.0), (2.0, 2.0), (0.15, 0.3)])
def test_ou_stationary_variance(kappa, sigma):
    v = ou_stationary_variance(kappa, sigma, 2000 / kappa, dt=0.01, seed=1, n_paths=8)
    assert abs(v / (sigma ** 2 / (2 * kappa)) - 1) < 0.05


def test_ou_zero_noise_and_validation():
    assert ou_stationary_variance(0.5, 0.0, 100.0) == 0.0
    with pytest.raises(ConfigError):
        ou_stationary_variance(0.0, 1.0, 100.0)
    with pytest.raises(StabilityError):
        ou_stationary_variance(200.0, 1.0, 100.0, dt=0.01)


def test_ou_matches_exact_recursion():
    # independent oracle: plain loop of the Euler-Maruyama update
    kappa, sigma, dt = 0.5, 1.0, 0.01
    rng = np.random.default_rng(3)
    burn, steps = int(round(10 / kappa / dt)), int(round(50.0 / dt))
    z = sigma * math.sqrt(dt) * rng.standard_normal(burn + steps)
    x, path = 0.0, []
    for k in range(burn + steps):
        x = x - kappa * x * dt + z[k]
        path.append(x)
    assert ou_stationary_variance(kappa, sigma, 50.0, dt, seed=3) == pytest.approx(np.var(path[burn:], ddof=1),
                                                                                    rel=1e-10)


def test_aggregate_constant_mode():
    from adoptnet.reductions import aggregate

    assert aggregate().passed
