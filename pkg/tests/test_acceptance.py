"""End-to-end acceptance checks, one test per criterion.

Run ``pytest -v tests/test_acceptance.py`` for one pass/fail line each.
"""
import math
import time

import numpy as np
import pytest

from adoptnet import config
from adoptnet.amplification import (
    amplification_by_integration,
    amplification_factors,
    amplification_report,
    decompose,
    validate_against_simulation,
)
from adoptnet.dynamics import ModelParams, SourceSchedule, integrate, ou_stationary_variance
from adoptnet.empirical import fixture_paths, ingest, run_pipeline
from adoptnet.feynman_kac import estimate, make_walk_generator
from adoptnet.graph import build_operators, generate_network
from adoptnet.intervention import Shock, bimodality, run_duration_sweep, run_shock_experiment, target_nodes
from adoptnet.jumps import JumpParams, simulate_jump_diffusion
from adoptnet.reductions import run_all
from adoptnet.stats import fit_scurve, logistic, ols, spearman, t_cdf

from test_jumps import two_components
from test_stats import T975, brute_pearson, brute_ranks

pytestmark = pytest.mark.slow


def test_01_amplification_matches_simulation():
    cfg = config.preset("fig3")
    _, ops = config.network(cfg)
    assert ops.n == 40
    start = time.perf_counter()
    val = validate_against_simulation(ops, config.model_params(cfg), seed=0, backend="python")
    elapsed = time.perf_counter() - start
    assert val.correlation >= 0.99, f"correlation {val.correlation:.5f}"
    assert elapsed < 60, f"took {elapsed:.1f} s"


def test_02_closed_form_matches_time_integration():
    kinds = [("random", {"p": 0.2}), ("scale_free", {"m": 2}), ("clustered", {"k": 3})]
    rng = np.random.default_rng(2)
    worst = 0.0
    for inst in range(10):
        kind, params = kinds[inst % 3]
        n = int(rng.integers(8, 41))
        ops = build_operators(generate_network(kind, n, params, seed=inst))
        p = ModelParams(rng.uniform(0, 1), rng.uniform(0, 1.5), rng.uniform(0, 0.5), rng.uniform(0.1, 0.3))
        closed = amplification_factors(ops, p)
        oracle = amplification_by_integration(ops, p)
        worst = max(worst, float(np.max(np.abs(closed - oracle) / np.abs(oracle))))
    assert worst <= 1e-6, f"max relative error {worst:.2e}"


def test_03_channel_decomposition():
    _, ops = config.network(config.preset("baseline"))
    single = ModelParams(0.5, 0.0, 0.0, 0.15)
    for i in range(ops.n):
        d = decompose(ops, single, i)
        assert d.network == 0.0 and d.interaction == 0.0
        assert abs(d.total - (1 + d.spatial)) <= 1e-10
    cfg = config.preset("table2")
    _, ops = config.network(cfg)
    rep = amplification_report(ops, config.model_params(cfg))
    top = rep.top(15)
    assert rep.network[top[0]] > rep.spatial[top[0]]
    negative = int((rep.interaction[top] < 0).sum())
    assert negative >= 10, f"negative interaction in {negative} of 15"


def test_04_two_regime_shock():
    cfg = config.preset("fig1")
    _, ops = config.network(cfg)
    params, jumps = config.model_params(cfg), config.jump_params(cfg)
    amp = amplification_report(ops, params)
    small = run_shock_experiment(ops, params, jumps, Shock(cfg["small_node_count"], cfg["intensity"], cfg["duration"]),
                                 50, seed=0, amp=amp)
    large = run_shock_experiment(ops, params, jumps, Shock(cfg["node_count"], cfg["intensity"], cfg["duration"]),
                                 50, seed=0, amp=amp)
    ratio = large.median / small.median
    check = bimodality(large)
    assert ratio >= 5, f"median ratio {ratio:.1f}"
    assert check.bimodal, (f"median-seed node shares: {check.high_fraction:.0%} above 0.9, "
                           f"{check.low_fraction:.0%} below 0.1 (median ratio {ratio:.0f}x passes)")


def test_05_duration_sweep():
    cfg = config.preset("baseline")
    _, ops = config.network(cfg)
    params, jumps = config.model_params(cfg), config.jump_params(cfg)
    sweep = run_duration_sweep(ops, params, jumps, [1, 2, 4, 7], cfg["intensity"], 50,
                               node_count=cfg["node_count"], seed=0)
    med = sweep.medians
    assert med[0] < 0.10 and med[1] < 0.10, med
    assert med[2] > 0.30 and med[3] > 0.30, med
    assert np.all(np.diff(med) >= 0), med


def test_06_path_estimator_equivalence():
    cfg = config.preset("baseline")
    cfg["lambda_x"] = 0.0
    _, ops = config.network(cfg)
    params = config.model_params(cfg)
    walks = make_walk_generator(ops, params)
    source = Shock(cfg["node_count"], cfg["intensity"], cfg["duration"]).schedule(target_nodes(ops, params, 18))
    t = 10.0
    within = total = 0
    for trial in range(20):
        rng = np.random.default_rng(1000 + trial)
        tau0 = rng.uniform(0, 0.5, ops.n)
        ref = integrate(ops, params.with_(t_end=t, dt=0.001), source, tau0, clamp=False).terminal
        for node in rng.choice(ops.n, 10, replace=False):
            est, se = estimate(walks, params.kappa, source, tau0, int(node), t, 4000, seed=trial)
            within += abs(est - ref[node]) <= 3 * se
            total += 1
    assert within >= 0.95 * total, f"{within}/{total} within 3 SE"
    paths = np.array([1_000, 10_000, 100_000])
    tau0 = np.random.default_rng(7).uniform(0, 0.5, ops.n)
    se = [estimate(walks, params.kappa, source, tau0, 0, t, int(m), seed=3).standard_error for m in paths]
    slope = np.polyfit(np.log(paths), np.log(se), 1)[0]
    assert abs(slope + 0.5) <= 0.1, f"slope {slope:.3f}"


def test_07_nesting_reductions():
    results = run_all(0)
    failed = [f"{r.name}={r.value:.3g}" for r in results if not r.passed]
    assert len(results) == 4 and not failed, failed


def test_08_fluctuation_dissipation():
    for kappa, sigma in [(0.5, 1.0), (2.0, 2.0), (0.15, 0.4)]:
        v = ou_stationary_variance(kappa, sigma, 2000 / kappa, dt=0.01, seed=0, n_paths=8)
        target = sigma ** 2 / (2 * kappa)
        assert abs(v / target - 1) <= 0.05, f"kappa={kappa}, sigma={sigma}: {v:.4f} vs {target:.4f}"


def test_09_cascade_limit():
    net, _ = two_components(seed=3)
    ops = build_operators(net)
    comp = net.components()
    p = ModelParams(0.0, 0.0, 0.0, 0.1, dt=0.1, t_end=1.0)
    jumps = JumpParams(0.0, 200.0, 0.35, absorbing=False)
    for seed in range(20):
        tau0 = np.random.default_rng(seed).uniform(0.3, 0.9, ops.n)
        assert tau0.mean() >= jumps.tau_star
        traj = simulate_jump_diffusion(ops, p, jumps, None, tau0, seed=seed)
        decay = (1 - p.kappa * p.dt) ** 10
        for c in np.unique(comp):
            block = traj.states[10, comp == c]
            np.testing.assert_allclose(block, tau0[comp == c].max() * decay, rtol=1e-12)


def test_10_statistics_engine():
    rng = np.random.default_rng(10)
    for _ in range(20):
        n, k = int(rng.integers(8, 50)), int(rng.integers(2, 6))
        X = np.c_[np.ones(n), rng.normal(size=(n, k - 1))]
        y = X @ rng.normal(size=k) + rng.normal(size=n)
        beta = np.linalg.solve(X.T @ X, X.T @ y)
        np.testing.assert_allclose(ols(y, X).coefficients, beta, rtol=0, atol=1e-10)
    for _ in range(1000):
        n = int(rng.integers(3, 15))
        x, y = rng.integers(0, 6, n).astype(float), rng.integers(0, 6, n).astype(float)
        if np.ptp(x) == 0 or np.ptp(y) == 0:
            continue
        assert abs(spearman(x, y).rho - brute_pearson(brute_ranks(x), brute_ranks(y))) <= 1e-12
    for df, q in T975.items():
        assert abs(t_cdf(q, df) - 0.975) <= 1e-6
    t = np.linspace(0, 300, 20)
    fit = fit_scurve(t, logistic(t, 1.0, 0.05, 89.0))
    assert max(abs(fit.L - 1.0), abs(fit.k - 0.05), abs(fit.t0 - 89.0)) <= 1e-6


def test_11_empirical_pipeline():
    panel, net = ingest(*fixture_paths())
    res = run_pipeline(panel, net, config.model_params(config.preset("baseline")))
    means = [g.mean_amplification for g in res.groups.groups]
    assert means[0] > means[1] > means[2], means
    r2 = [r.r_squared for r in res.regressions]
    assert all(b >= a for a, b in zip(r2, r2[1:])), r2
    assert math.isclose(sum(g.amplification_share for g in res.groups.groups), 1.0, abs_tol=1e-10)
