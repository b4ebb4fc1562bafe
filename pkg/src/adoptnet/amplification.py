"""Adoption amplification factors and their channel decomposition.

A unit impulse at node ``i`` under the linear dynamics has time-integrated
response ``r = M^{-1} e_i`` with ``M = kappa I - A``. The amplification factor
is the ratio of system-wide to own response, ``sum_j r_j / r_i``. It equals 1
without spillover channels and does not depend on the impulse size.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import linalg

from .dynamics import ModelParams, factor_resolvent, integrate
from .errors import ConfigError
from .graph import OperatorSet


def _response_matrix(ops: OperatorSet, params: ModelParams) -> np.ndarray:
    # column i is the integrated response to a unit impulse at i
    return linalg.cho_solve(factor_resolvent(ops, params), np.eye(ops.n))


def amplification_factors(ops: OperatorSet, params: ModelParams) -> np.ndarray:
    """``A_i`` for every node.

    Raises
    ------
    IndefiniteOperatorError
        If ``M`` is not positive definite; carries the smallest eigenvalue.
    """
    R = _response_matrix(ops, params)
    return R.sum(axis=0) / np.diag(R)


def amplification_factor(ops: OperatorSet, params: ModelParams, node: int) -> float:
    if not 0 <= node < ops.n:
        raise ConfigError(f"node {node} outside 0..{ops.n - 1}")
    e = np.zeros(ops.n)
    e[node] = 1.0
    r = linalg.cho_solve(factor_resolvent(ops, params), e)
    return float(r.sum() / r[node])


def _channels(ops, params):
    total = amplification_factors(ops, params)
    spatial = amplification_factors(ops, params.with_(nu_n=0.0, lambda_x=0.0)) - 1.0
    network = amplification_factors(ops, params.with_(nu_s=0.0, lambda_x=0.0)) - 1.0
    interaction = total - 1.0 - spatial - network
    return total, spatial, network, interaction


@dataclass(frozen=True)
class Decomposition:
    total: float
    spatial: float
    network: float
    interaction: float


def decompose(ops: OperatorSet, params: ModelParams, node: int) -> Decomposition:
    """Split ``A_i - 1`` into spatial-only, network-only and residual interaction parts.

    The single-channel parts zero the other coefficients while keeping all
    operators fixed; the interaction part is what remains and may be negative.
    """
    if not 0 <= node < ops.n:
        raise ConfigError(f"node {node} outside 0..{ops.n - 1}")
    total, spatial, network, interaction = _channels(ops, params)
    return Decomposition(float(total[node]), float(spatial[node]), float(network[node]),
                         float(interaction[node]))


def rank_descending(values: np.ndarray) -> np.ndarray:
    """Rank 1 for the largest value; ties go to the lower node index."""
    order = np.lexsort((np.arange(len(values)), -np.asarray(values)))
    rank = np.empty(len(values), dtype=np.int64)
    rank[order] = np.arange(1, len(values) + 1)
    return rank


@dataclass(frozen=True)
class AmplificationReport:
    total: np.ndarray
    spatial: np.ndarray
    network: np.ndarray
    interaction: np.ndarray

    @property
    def n(self) -> int:
        return len(self.total)

    @property
    def rank(self) -> np.ndarray:
        return rank_descending(self.total)

    @property
    def order(self) -> np.ndarray:
        """Nodes from highest to lowest amplification."""
        return np.argsort(self.rank)

    @property
    def mean(self) -> float:
        return float(self.total.mean())

    def top(self, k: int) -> np.ndarray:
        return self.order[:k]

    def to_csv(self, path) -> Path:
        path = Path(path)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["node", "total", "spatial", "network", "interaction", "rank"])
            rank = self.rank
            for i in range(self.n):
                w.writerow([i, repr(float(self.total[i])), repr(float(self.spatial[i])),
                            repr(float(self.network[i])), repr(float(self.interaction[i])), int(rank[i])])
        return path


def amplification_report(ops: OperatorSet, params: ModelParams) -> AmplificationReport:
    return AmplificationReport(*_channels(ops, params))


def amplification_by_integration(ops: OperatorSet, params: ModelParams, t_end: float | None = None) -> np.ndarray:
    """Time-integration oracle for every ``A_i``.

    Steps all unit impulses together with unclamped explicit Euler and sums the
    responses with the left rectangle rule up to ``t_end`` (default
    ``50 / kappa``). No linear solve is involved.
    """
    params.check_stability(ops)
    horizon = 50.0 / params.kappa if t_end is None else t_end
    steps = int(round(horizon / params.dt))
    step = np.eye(ops.n) + params.dt * (params.drift_operator(ops) - params.kappa * np.eye(ops.n))
    X = np.eye(ops.n)
    acc = np.zeros((ops.n, ops.n))
    for _ in range(steps):
        acc += X
        X = step @ X
    return acc.sum(axis=0) / np.diag(acc)


@dataclass(frozen=True)
class SimulationValidation:
    correlation: float
    simulated: np.ndarray
    theoretical: np.ndarray
    t_end: float


def simulated_amplification(ops, params, t_end: float | None = None, backend=None) -> np.ndarray:
    """Amplification read off simulated impulse responses.

    For each node a unit impulse is integrated with the unclamped
    deterministic solver; the ratio of time-integrated total adoption to
    time-integrated own adoption is returned.
    """
    horizon = 50.0 / params.kappa if t_end is None else t_end
    p = params.with_(t_end=horizon)
    out = np.empty(ops.n)
    for i in range(ops.n):
        tau0 = np.zeros(ops.n)
        tau0[i] = 1.0
        traj = integrate(ops, p, None, tau0, clamp=False, backend=backend)
        integral = traj.states[:-1].sum(axis=0) * p.dt
        out[i] = integral.sum() / integral[i]
    return out


def validate_against_simulation(ops, params, t_end: float | None = None, seed: int = 0,
                                backend=None) -> SimulationValidation:
    """Pearson correlation between simulated and closed-form amplification.

    The simulation is deterministic, so ``seed`` only labels the run.
    """
    sim = simulated_amplification(ops, params, t_end, backend)
    theory = amplification_factors(ops, params)
    horizon = 50.0 / params.kappa if t_end is None else t_end
    rho = float(np.corrcoef(sim, theory)[0, 1])
    return SimulationValidation(rho, sim, theory, horizon)
