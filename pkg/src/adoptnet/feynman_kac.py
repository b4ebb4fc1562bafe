"""Monte Carlo path estimator of the adoption intensity.

For a source that is piecewise constant in time, the linear master equation
without interaction term has the representation

    tau_i(t) = E_i[ exp(-kappa t) tau0(Y_t) + int_0^t exp(-kappa u) S(Y_u, t - u) du ]

where ``Y`` is the continuous-time Markov chain with rate matrix
``Q = nu_s L_s + nu_n L_n`` started at node ``i`` (the chain runs backwards in
calendar time). Holding times are exponential, so the estimator carries no
time-discretization bias; the source integral along each holding interval is
evaluated exactly.

Every path draws its uniforms from a counter-based hash of
``(seed, node, path id, draw)``. Splitting the paths into chunks or running
chunks on several threads therefore gives the same samples as one sequential
pass.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _backend, _pykernels
from .dynamics import ModelParams, SourceSchedule
from .errors import ConfigError, NegativeRateError
from .graph import OperatorSet, transition_table
from .jumps import neighbor_tables

NEGATIVE_RATE_TOL = 1e-9


@dataclass(frozen=True)
class WalkGenerator:
    """Rate matrix ``Q`` (rows sum to 0) and its sampling tables."""

    Q: np.ndarray
    q: np.ndarray
    nbr: np.ndarray
    cum: np.ndarray

    @property
    def n(self) -> int:
        return self.Q.shape[0]

    @classmethod
    def from_rates(cls, R: np.ndarray) -> "WalkGenerator":
        """Build from a matrix whose off-diagonal part holds the jump rates."""
        R = np.array(R, dtype=float)
        off = R - np.diag(np.diag(R))
        worst = float(off.min(initial=0.0))
        if worst < -NEGATIVE_RATE_TOL:
            i, j = np.unravel_index(int(np.argmin(off)), off.shape)
            raise NegativeRateError(
                f"rate matrix has a negative off-diagonal entry Q[{i},{j}] = {worst:.3g}; "
                "path sampling needs lambda_x = 0 or a spatial kernel without negative couplings"
            )
        off[off < 0] = 0.0
        q = off.sum(axis=1)
        Q = off - np.diag(q)
        nbr, cum, _ = transition_table(off)
        return cls(Q, q, nbr, cum)


def make_walk_generator(ops: OperatorSet, params: ModelParams) -> WalkGenerator:
    """Walk generator ``Q = nu_s L_s + nu_n L_n + lambda_x L_x``.

    Raises
    ------
    NegativeRateError
        If an off-diagonal rate is below ``-1e-9``, which can happen once the
        interaction operator enters. Tiny negative entries are set to 0.
    """
    return WalkGenerator.from_rates(params.drift_operator(ops))


def jump_transition_matrix(ops: OperatorSet, jump_target: str = "uniform_neighbor") -> np.ndarray:
    """Row-stochastic jump-target law ``P`` over network neighbours."""
    nbr, cum, deg = neighbor_tables(ops, jump_target)
    P = np.zeros((ops.n, ops.n))
    for i in range(ops.n):
        prev = 0.0
        for d in range(deg[i]):
            P[i, nbr[i, d]] += cum[i, d] - prev
            prev = cum[i, d]
    return P


def levy_drift_operator(ops, params, lambda0: float, jump_target: str = "uniform_neighbor"):
    """``A + lambda0 (P - I)``: the drift with constant-rate neighbour jumps in expectation."""
    P = jump_transition_matrix(ops, jump_target)
    has = P.sum(axis=1) > 0
    J = P - np.diag(has.astype(float))
    return params.drift_operator(ops) + lambda0 * J


def make_levy_walk_generator(ops, params, lambda0: float, jump_target: str = "uniform_neighbor"):
    """Walk generator augmented by compound-Poisson node jumps at constant rate ``lambda0``."""
    if lambda0 < 0:
        raise ConfigError(f"lambda0 must be >= 0, got {lambda0}")
    return WalkGenerator.from_rates(levy_drift_operator(ops, params, lambda0, jump_target))


@dataclass(frozen=True)
class FKEstimate:
    estimate: float
    standard_error: float
    n_paths: int

    def __iter__(self):
        return iter((self.estimate, self.standard_error))


def sample_paths(walks, kappa, source, tau0, node, t, n_paths, seed, path_offset=0, backend=None):
    """Raw per-path samples for paths ``path_offset .. path_offset + n_paths - 1``."""
    bounds, seg_val = (source or SourceSchedule()).calendar_segments(walks.n)
    kern = _backend.get(backend)
    return kern.fk_paths(
        walks.nbr, walks.cum, np.ascontiguousarray(walks.q), bounds, seg_val,
        np.ascontiguousarray(tau0, dtype=float), float(kappa), float(t), int(node),
        int(n_paths), int(path_offset), int(seed),
    )


def estimate(
    walks: WalkGenerator,
    kappa: float,
    source: SourceSchedule | None,
    tau0,
    node: int,
    t: float,
    n_paths: int,
    seed: int = 0,
    *,
    chunk_size: int | None = None,
    workers: int = 1,
    backend: str | None = None,
) -> FKEstimate:
    """Path-average estimate of ``tau_node(t)`` with its standard error.

    Parameters
    ----------
    walks : WalkGenerator
    kappa : float
        Decay rate (> 0).
    source : SourceSchedule or None
    tau0 : array_like
        Initial state.
    node, t : int, float
        Target node and time.
    n_paths : int
        At least 100.
    seed : int
    chunk_size, workers : int, optional
        Split the paths into chunks and evaluate them on ``workers`` threads.
        The result does not depend on either setting.
    """
    if n_paths < 100:
        raise ConfigError(f"n_paths must be >= 100, got {n_paths}")
    if not kappa > 0 or not t >= 0:
        raise ConfigError("need kappa > 0 and t >= 0")
    if not 0 <= node < walks.n:
        raise ConfigError(f"node {node} outside 0..{walks.n - 1}")
    tau0 = np.asarray(tau0, dtype=float)
    if tau0.shape != (walks.n,):
        raise ConfigError(f"tau0 must have length {walks.n}")
    if source is not None:
        source.validate(walks.n)
    chunk = int(chunk_size or n_paths)
    offsets = list(range(0, n_paths, chunk))

    def run(off):
        return sample_paths(walks, kappa, source, tau0, node, t, min(chunk, n_paths - off), seed,
                            path_offset=off, backend=backend)

    if workers > 1 and len(offsets) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, offsets))
    else:
        parts = [run(off) for off in offsets]
    x = np.concatenate(parts)
    # identical samples carry no sampling error; avoid rounding noise
    se = 0.0 if x.min() == x.max() else float(x.std(ddof=1) / math.sqrt(x.size))
    return FKEstimate(float(x.mean()), se, int(x.size))


def discrete_weights(kappa: float, dt: float, n_steps: int) -> np.ndarray:
    """Discount applied to a source contribution ``m`` steps in the past: ``(1 - kappa dt)^m``."""
    if not 0 < kappa * dt < 1:
        raise ConfigError("need 0 < kappa * dt < 1")
    return (1.0 - kappa * dt) ** np.arange(n_steps + 1)


def estimate_discrete(
    walks: WalkGenerator,
    kappa: float,
    source: SourceSchedule | None,
    tau0,
    node: int,
    n_steps: int,
    dt: float,
    n_paths: int,
    seed: int = 0,
) -> FKEstimate:
    """Discrete-time chain estimator of the recursion
    ``tau_{k+1} = (1 - kappa dt) P tau_k + dt S_k`` with ``P = I + dt Q``.

    A path starting at ``node`` takes ``n_steps`` moves of ``P``; the source
    met after ``m`` moves enters with weight ``dt (1 - kappa dt)^m`` and the
    initial state with ``(1 - kappa dt)^{n_steps}``.
    """
    if n_paths < 100:
        raise ConfigError(f"n_paths must be >= 100, got {n_paths}")
    if dt * walks.q.max(initial=0.0) > 1:
        raise ConfigError("dt too large: P = I + dt Q has negative entries")
    w = discrete_weights(kappa, dt, n_steps)
    n = walks.n
    starts, seg_val = (source or SourceSchedule()).step_segments(n, dt)
    # P-move: stay with probability 1 - dt q_i, else move by the jump table
    stay = 1.0 - dt * walks.q
    cur = np.full(n_paths, node, dtype=np.int64)
    ids = np.arange(n_paths, dtype=np.uint64)
    acc = np.zeros(n_paths)
    tau0 = np.asarray(tau0, dtype=float)
    for m in range(n_steps):
        step = n_steps - 1 - m  # calendar step of the source seen after m moves
        seg = int(np.searchsorted(starts, step, side="right")) - 1
        acc += dt * w[m] * seg_val[seg, cur]
        u = _pykernels.uniforms(seed, node, ids, 2 * m)
        moving = u >= stay[cur]
        if moving.any():
            u2 = _pykernels.uniforms(seed, node, ids[moving], 2 * m + 1)
            cols = _pykernels._pick(walks.cum, cur[moving], u2)
            cur[moving] = walks.nbr[cur[moving], cols]
    acc += w[n_steps] * tau0[cur]
    return FKEstimate(float(acc.mean()), float(acc.std(ddof=1) / math.sqrt(n_paths)), n_paths)
