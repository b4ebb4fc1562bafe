"""Jump-diffusion with a critical-mass switch in the jump intensity.

Each Euler step applies the deterministic drift, then compares the system
mean with ``tau_star``: below it every node jumps at rate ``lambda0``, at or
above it at rate ``lambda1``. Jumps are thinned on the Euler grid (a node
fires with probability ``1 - exp(-lambda dt)``). A firing node copies the
largest state among the neighbours it samples, so jumps never lower
adoption. The number of sampled neighbours is the Poisson count of jumps in
the step conditioned on at least one, which reduces to a single draw for
small ``lambda dt`` and to the full neighbourhood maximum as
``lambda dt`` grows.

With ``absorbing`` on, a node whose state reaches ``absorb_level`` is set
to 1 and frozen there (neither drift nor decay acts on it afterwards).

The rate is per node, so the system-wide jump rate is ``n * lambda``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import JUMP, ModelParams, SourceSchedule, Trajectory, run_kernel
from .errors import ConfigError
from .graph import OperatorSet, transition_table

JUMP_TARGETS = ("uniform_neighbor", "weighted_neighbor")


@dataclass(frozen=True)
class JumpParams:
    lambda0: float = 0.0
    lambda1: float = 0.0
    tau_star: float = 0.35
    jump_target: str = "uniform_neighbor"
    absorb_level: float = 0.95
    absorbing: bool = True

    def __post_init__(self):
        if not (0 <= self.lambda0 <= self.lambda1) or not math.isfinite(self.lambda1):
            raise ConfigError(f"need 0 <= lambda0 <= lambda1 < inf, got ({self.lambda0}, {self.lambda1})")
        if not 0 < self.tau_star < 1:
            raise ConfigError(f"tau_star must be in (0, 1), got {self.tau_star}")
        if not 0 < self.absorb_level <= 1:
            raise ConfigError(f"absorb_level must be in (0, 1], got {self.absorb_level}")
        if self.jump_target not in JUMP_TARGETS:
            raise ConfigError(f"jump_target must be one of {JUMP_TARGETS}, got {self.jump_target!r}")


def neighbor_tables(ops: OperatorSet, jump_target: str = "uniform_neighbor"):
    """Jump-target law over ``G``-neighbours, read off the network Laplacian."""
    G = np.array(ops.L_n)
    np.fill_diagonal(G, 0.0)
    G[G < 0] = 0.0
    if jump_target == "uniform_neighbor":
        G = (G > 0).astype(float)
    return transition_table(G)


def simulate_jump_diffusion(
    ops: OperatorSet,
    params: ModelParams,
    jumps: JumpParams,
    source: SourceSchedule | None = None,
    tau0=None,
    seed: int = 0,
    *,
    record_every: int = 1,
    backend: str | None = None,
) -> Trajectory:
    """Simulate one seeded jump-diffusion path up to ``params.t_end``.

    The random stream is a counter-based hash of ``(seed, step, node, draw)``,
    so the compiled and the numpy backends produce the same events. Isolated
    nodes never jump. States are clamped to ``[0, 1]``.
    """
    if tau0 is None:
        tau0 = np.zeros(ops.n)
    tables = neighbor_tables(ops, jumps.jump_target)
    return run_kernel(ops, params, source, tau0, clamp=True, jumps=jumps, tables=tables,
                      seed=seed, record_every=record_every, backend=backend)


@dataclass(frozen=True)
class RegimeReport:
    """Threshold crossing, jump activity and adoption velocity per regime.

    ``jump_counts``, ``exposure`` (node-time) and ``velocity`` are indexed by
    regime: 0 below the critical mass, 1 at or above it. ``jump_rate`` is the
    thinning-corrected intensity ``-log(1 - p) / dt`` with ``p`` the fraction
    of node-steps that fired.
    """

    crossing_time: float | None
    jump_counts: tuple[int, int]
    exposure: tuple[float, float]
    jump_rate: tuple[float, float]
    jump_rate_se: tuple[float, float]
    velocity: tuple[float, float]
    steps: tuple[int, int]


def regime_summary(traj: Trajectory, jumps: JumpParams) -> RegimeReport:
    """Summarize the two regimes of a simulated trajectory.

    Velocities are the mean of ``d mean(tau) / dt`` over recorded intervals,
    classified by the regime at the start of the interval. Intervals that
    start with every node at 1 are skipped since the state cannot move.
    """
    if len(traj.times) == 0:
        raise ConfigError("empty trajectory")
    means = traj.mean()
    hit = np.nonzero(means >= jumps.tau_star)[0]
    crossing = float(traj.times[hit[0]]) if hit.size else None

    dt = traj.dt
    regime = traj.regime if traj.regime is not None else np.zeros(0, dtype=np.uint8)
    if regime.size == 0 and len(traj.times) > 1:
        regime = np.zeros(int(round(traj.times[-1] / dt)), dtype=np.uint8)
    n = traj.n
    steps = (int(np.sum(regime == 0)), int(np.sum(regime == 1)))
    jevents = traj.events.select(traj.events.kind == JUMP)
    counts = (int(np.sum(jevents.regime == 0)), int(np.sum(jevents.regime == 1)))
    exposure = tuple(float(s * n * dt) for s in steps)

    rates, ses = [], []
    for c, s in zip(counts, steps):
        trials = s * n
        if trials == 0:
            rates.append(float("nan"))
            ses.append(float("nan"))
            continue
        p = c / trials
        if p >= 1.0:
            rates.append(float("inf"))
            ses.append(float("nan"))
            continue
        rates.append(-math.log1p(-p) / dt)
        # delta method on the binomial fraction
        ses.append(math.sqrt(p / ((1 - p) * trials)) / dt)

    velocity = [float("nan"), float("nan")]
    if len(traj.times) > 1 and regime.size:
        step_idx = np.rint(traj.times / dt).astype(np.int64)
        v = np.diff(means) / np.diff(traj.times)
        start_regime = regime[np.minimum(step_idx[:-1], regime.size - 1)]
        active = traj.states[:-1].min(axis=1) < 1.0
        for r in (0, 1):
            sel = active & (start_regime == r)
            if sel.any():
                velocity[r] = float(v[sel].mean())
    return RegimeReport(crossing, counts, exposure, tuple(rates), tuple(ses), tuple(velocity), steps)
