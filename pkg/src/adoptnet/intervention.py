"""Critical-mass experiments: shock size and duration sweeps and the threshold rule.

Shocks target the ``node_count`` institutions with the highest amplification
factor (ties broken by index) with a constant source over ``[0, duration)``.
Every seed of an ensemble runs the jump-diffusion to ``params.t_end``.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .amplification import AmplificationReport, amplification_report
from .dynamics import ModelParams, SourceSchedule
from .errors import ConfigError
from .graph import OperatorSet
from .jumps import JumpParams, regime_summary, simulate_jump_diffusion

HIST_BINS = np.linspace(0.0, 1.0, 11)


@dataclass(frozen=True)
class Shock:
    node_count: int
    intensity: float
    duration: float

    def __post_init__(self):
        if self.node_count < 0 or self.intensity < 0 or self.duration < 0:
            raise ConfigError("shock node_count, intensity and duration must be >= 0")

    def schedule(self, targets) -> SourceSchedule:
        return SourceSchedule.shock(targets[: self.node_count], self.intensity, self.duration)


def seed_sequence(seed: int, n_seeds: int) -> list[int]:
    """Independent 63-bit per-run seeds derived from one base seed."""
    state = np.random.SeedSequence(int(seed) & ((1 << 63) - 1)).generate_state(n_seeds, dtype=np.uint64)
    return [int(s) >> 1 for s in state]


def target_nodes(ops, params, node_count: int, amp: AmplificationReport | None = None) -> np.ndarray:
    if node_count > ops.n:
        raise ConfigError(f"node_count {node_count} exceeds network size {ops.n}")
    amp = amp or amplification_report(ops, params)
    return amp.top(node_count)


@dataclass(frozen=True)
class EnsembleSummary:
    """Per-seed terminal outcomes of one shock configuration."""

    seeds: np.ndarray
    terminal_mean: np.ndarray
    crossed: np.ndarray
    crossing_time: np.ndarray
    histograms: np.ndarray
    terminal_states: np.ndarray
    targets: np.ndarray
    shock: Shock

    @property
    def median(self) -> float:
        return float(np.median(self.terminal_mean))

    def quartiles(self) -> tuple[float, float]:
        q1, q3 = np.percentile(self.terminal_mean, [25, 75])
        return float(q1), float(q3)

    def median_seed_index(self) -> int:
        """Seed whose terminal mean is the (lower) median."""
        order = np.argsort(self.terminal_mean, kind="stable")
        return int(order[(len(order) - 1) // 2])

    def rows(self, **extra):
        for k, s in enumerate(self.seeds):
            yield dict(extra, seed=int(s), terminal_mean=float(self.terminal_mean[k]),
                       crossed=bool(self.crossed[k]), crossing_time=float(self.crossing_time[k]))


def _one_run(args):
    ops, params, jumps, source, tau0, seed, backend = args
    traj = simulate_jump_diffusion(ops, params, jumps, source, tau0, seed,
                                   record_every=1, backend=backend)
    rep = regime_summary(traj, jumps)
    return traj.terminal.copy(), rep.crossing_time


def run_shock_experiment(
    ops: OperatorSet,
    params: ModelParams,
    jumps: JumpParams,
    shock: Shock,
    n_seeds: int,
    seed: int = 0,
    *,
    tau0=None,
    amp: AmplificationReport | None = None,
    workers: int = 1,
    backend: str | None = None,
) -> EnsembleSummary:
    """Ensemble of jump-diffusion runs under one targeted shock.

    Returns per-seed terminal mean adoption, threshold crossing (time, or NaN
    if the system mean never reached ``tau_star``) and a 10-bin histogram of
    terminal node states.
    """
    if n_seeds < 1:
        raise ConfigError("n_seeds must be >= 1")
    targets = target_nodes(ops, params, shock.node_count, amp)
    source = shock.schedule(targets)
    tau0 = np.zeros(ops.n) if tau0 is None else np.asarray(tau0, dtype=float)
    seeds = seed_sequence(seed, n_seeds)
    jobs = [(ops, params, jumps, source, tau0, s, backend) for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_one_run, jobs))
    else:
        results = [_one_run(j) for j in jobs]
    terminal = np.array([r[0] for r in results])
    ctime = np.array([math.nan if r[1] is None else r[1] for r in results])
    hist = np.array([np.histogram(row, bins=HIST_BINS)[0] for row in terminal])
    return EnsembleSummary(
        seeds=np.array(seeds, dtype=np.uint64),
        terminal_mean=terminal.mean(axis=1),
        crossed=~np.isnan(ctime),
        crossing_time=ctime,
        histograms=hist,
        terminal_states=terminal,
        targets=np.asarray(targets),
        shock=shock,
    )


@dataclass(frozen=True)
class BimodalityCheck:
    high_fraction: float
    low_fraction: float
    bimodal: bool


def bimodality(summary: EnsembleSummary, high: float = 0.9, low: float = 0.1,
               min_high: float = 0.3, min_low: float = 0.1) -> BimodalityCheck:
    """Terminal node states at the median seed: enough mass near both ends?"""
    row = summary.terminal_states[summary.median_seed_index()]
    hi = float(np.mean(row > high))
    lo = float(np.mean(row < low))
    return BimodalityCheck(hi, lo, hi >= min_high and lo >= min_low)


@dataclass(frozen=True)
class DurationSweep:
    durations: tuple[float, ...]
    summaries: tuple[EnsembleSummary, ...]

    @property
    def medians(self) -> np.ndarray:
        return np.array([s.median for s in self.summaries])

    @property
    def quartiles(self) -> np.ndarray:
        return np.array([s.quartiles() for s in self.summaries])

    def rows(self):
        for d, s in zip(self.durations, self.summaries):
            yield from s.rows(duration=d)


def run_duration_sweep(
    ops: OperatorSet,
    params: ModelParams,
    jumps: JumpParams,
    durations,
    intensity: float,
    n_seeds: int,
    node_count: int = 18,
    seed: int = 0,
    **kwargs,
) -> DurationSweep:
    """Shock experiments over several durations at fixed per-node intensity.

    Every duration uses the same per-run seeds, so differences between
    durations are not sampling noise in the jump stream.
    """
    durations = tuple(float(d) for d in durations)
    if not durations:
        raise ConfigError("durations must be nonempty")
    amp = kwargs.pop("amp", None) or amplification_report(ops, params)
    out = tuple(
        run_shock_experiment(ops, params, jumps, Shock(node_count, intensity, d), n_seeds, seed,
                             amp=amp, **kwargs)
        for d in durations
    )
    return DurationSweep(durations, out)


@dataclass(frozen=True)
class ThresholdCheck:
    predicted_permanent: bool
    lhs: float
    gap: float


def threshold_check(amp: AmplificationReport | float, params: ModelParams, jumps: JumpParams,
                    source: SourceSchedule | None, tau0_mean: float, n: int | None = None) -> ThresholdCheck:
    """Sufficient condition for a permanent shift to the cascade regime.

    ``lhs`` integrates the network-wide source intensity ``I(s)`` over the
    intervention, weighted by the static mean amplification; ``gap`` is the
    distance of aggregate adoption from the critical mass, ``n (tau_star -
    tau0_mean)``. Permanence is predicted when ``lhs > gap``.
    """
    if isinstance(amp, AmplificationReport):
        a_bar, n = amp.mean, amp.n if n is None else n
    else:
        a_bar = float(amp)
        if n is None:
            raise ConfigError("n is required when a scalar mean amplification is given")
    lhs = (source or SourceSchedule()).integral() * a_bar
    gap = jumps.tau_star * n - tau0_mean * n
    return ThresholdCheck(bool(lhs > gap), float(lhs), float(gap))
