"""Executable limiting-case checks of the master equation.

* ``katz_shapiro``: with only the network channel, the steady state solves
  ``kappa tau_i - nu_n sum_j G_ij (tau_j - tau_i) = S_i``, equivalently
  ``tau_i = (S_i + nu_n sum_j G_ij tau_j) / (kappa + nu_n d_i)``.
* ``timing_friction``: free decay halves in ``ln 2 / kappa``.
* ``hazard``: without spillover channels nodes evolve independently.
* ``aggregate``: on the complete graph a uniform state stays uniform and its
  mean follows ``d m/dt = -kappa m + S``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import ModelParams, SourceSchedule, integrate, steady_state
from .graph import SpatialNetwork, build_operators, generate_network, spatial_weights

HALF_LIFE_KAPPAS = (0.1, 0.15, 0.5)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""


def katz_shapiro(seed: int = 0, n: int = 30, nu_n: float = 0.8, kappa: float = 0.15) -> CheckResult:
    net = generate_network("random", n, seed=seed)
    ops = build_operators(net)
    params = ModelParams(0.0, nu_n, 0.0, kappa)
    S = np.random.default_rng(seed).uniform(0.0, 0.1, n)
    tau = steady_state(ops, params, S)
    G = net.adjacency
    resid = kappa * tau - nu_n * (G @ tau - G.sum(axis=1) * tau) - S
    fixed_point = (S + nu_n * G @ tau) / (kappa + nu_n * G.sum(axis=1)) - tau
    worst = float(max(np.abs(resid).max(), np.abs(fixed_point).max()))
    return CheckResult("katz_shapiro", worst < 1e-8, worst, 1e-8,
                       "steady-state residual and degree-weighted fixed point")


def half_life(kappa: float, dt: float = 0.01, n: int = 4, seed: int = 0) -> float:
    """First grid time at which free decay from 1 reaches 1/2 or less."""
    net = generate_network("random", n, {"p": 1.0}, seed=seed)
    ops = build_operators(net)
    params = ModelParams(0.0, 0.0, 0.0, kappa, dt=dt, t_end=3.0 * math.log(2) / kappa)
    traj = integrate(ops, params, None, np.ones(n))
    k = int(np.argmax(traj.states[:, 0] <= 0.5))
    return float(traj.times[k])


def timing_friction(dt: float = 0.01) -> CheckResult:
    errs = [abs(half_life(k, dt) - math.log(2) / k) for k in HALF_LIFE_KAPPAS]
    worst = max(errs)
    return CheckResult("timing_friction", worst <= dt, worst, dt,
                       f"half-life error for kappa in {HALF_LIFE_KAPPAS}")


def hazard(seed: int = 0, n: int = 30, kappa: float = 0.15) -> CheckResult:
    net = generate_network("random", n, seed=seed)
    ops = build_operators(net)
    params = ModelParams(0.0, 0.0, 0.0, kappa, t_end=20.0)
    rng = np.random.default_rng(seed)
    tau0 = rng.uniform(0.0, 0.5, n)
    source = SourceSchedule.shock(range(0, n, 3), 0.05, 5.0)
    base = integrate(ops, params, source, tau0)
    j = int(rng.integers(n))
    bumped = tau0.copy()
    bumped[j] = min(1.0, bumped[j] + 0.4)
    other = integrate(ops, params, source, bumped)
    keep = np.arange(n) != j
    diff = float(np.abs(base.states[:, keep] - other.states[:, keep]).max())
    return CheckResult("hazard", diff == 0.0, diff, 0.0, f"perturbed node {j}; other nodes must not move")


def complete_network(n: int, seed: int = 0, spatial_kernel="knn:4") -> SpatialNetwork:
    coords = np.random.default_rng(seed).random((n, 2))
    G = np.ones((n, n)) - np.eye(n)
    return SpatialNetwork(coords, G, spatial_weights(coords, spatial_kernel), str(spatial_kernel))


def aggregate(seed: int = 0, n: int = 20, params: ModelParams | None = None,
              level: float = 0.2, intensity: float = 0.05) -> CheckResult:
    params = params or ModelParams(0.5, 0.8, 0.3, 0.15, dt=0.01, t_end=20.0)
    ops = build_operators(complete_network(n, seed))
    source = SourceSchedule.shock(range(n), intensity, params.t_end)
    traj = integrate(ops, params, source, np.full(n, level), clamp=False)
    spread = float(traj.states.var(axis=1).max())
    kappa, dt = params.kappa, params.dt
    t = traj.times
    exact = intensity / kappa + (level - intensity / kappa) * np.exp(-kappa * t)
    mean_err = float(np.abs(traj.mean() - exact).max())
    # first-order Euler: global error below t_end * dt * max|m''| / 2
    tol = 0.5 * params.t_end * dt * kappa * abs(intensity - kappa * level) + 1e-12
    ok = spread <= 1e-20 and mean_err <= tol
    return CheckResult("aggregate", ok, mean_err, tol, f"max cross-node variance {spread:.3g}")


def run_all(seed: int = 0) -> list[CheckResult]:
    return [katz_shapiro(seed), timing_friction(), hazard(seed), aggregate(seed)]
