"""Deterministic integration of the discrete master equation.

The state ``tau`` evolves under

    d tau / dt = (nu_s L_s + nu_n L_n + lambda_x L_x) tau - kappa tau + S(t)

with explicit Euler steps. Also provides the linear steady state
``M^{-1} S`` with ``M = kappa I - A`` and an Ornstein-Uhlenbeck simulator for
the stationary-variance relation ``Var = sigma^2 / (2 kappa)``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import linalg
from scipy.signal import lfilter

from . import _backend
from .errors import ConfigError, IndefiniteOperatorError, StabilityError
from .graph import OperatorSet

JUMP, ABSORB = 0, 1
EVENT_KINDS = {JUMP: "jump", ABSORB: "absorb"}
REGIMES = {0: "below", 1: "above"}


@dataclass(frozen=True)
class ModelParams:
    """Channel coefficients, decay rate and integrator settings."""

    nu_s: float
    nu_n: float
    lambda_x: float
    kappa: float
    dt: float = 0.01
    t_end: float = 50.0

    def __post_init__(self):
        for name in ("nu_s", "nu_n", "lambda_x", "kappa", "dt", "t_end"):
            v = getattr(self, name)
            if not isinstance(v, (int, float, np.floating, np.integer)) or not math.isfinite(v):
                raise ConfigError(f"{name} must be a finite number, got {v!r}")
        if self.nu_s < 0 or self.nu_n < 0:
            raise ConfigError(f"diffusion rates must be >= 0 (nu_s={self.nu_s}, nu_n={self.nu_n})")
        if self.kappa <= 0:
            raise ConfigError(f"kappa must be > 0, got {self.kappa}")
        if self.dt <= 0 or self.t_end <= 0:
            raise ConfigError(f"dt and t_end must be > 0 (dt={self.dt}, t_end={self.t_end})")

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.t_end / self.dt)))

    def drift_operator(self, ops: OperatorSet) -> np.ndarray:
        return ops.combine(self.nu_s, self.nu_n, self.lambda_x)

    def max_stable_dt(self, ops: OperatorSet) -> float:
        """``2 / (kappa + spectral radius of A)``."""
        A = self.drift_operator(ops)
        radius = float(np.abs(np.linalg.eigvalsh(0.5 * (A + A.T))).max())
        return 2.0 / (self.kappa + radius)

    def check_stability(self, ops: OperatorSet) -> None:
        dt_max = self.max_stable_dt(ops)
        if not self.dt < dt_max:
            raise StabilityError(self.dt, dt_max)


@dataclass(frozen=True)
class Window:
    """Constant intensity on ``nodes`` over ``[t_start, t_end)``."""

    t_start: float
    t_end: float
    nodes: tuple[int, ...]
    intensity: float

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(int(i) for i in self.nodes))
        if not self.t_start < self.t_end:
            raise ConfigError(f"window needs t_start < t_end, got [{self.t_start}, {self.t_end})")
        if self.t_start < 0:
            raise ConfigError(f"window starts before t=0: {self.t_start}")
        if not (self.intensity >= 0 and math.isfinite(self.intensity)):
            raise ConfigError(f"window intensity must be finite and >= 0, got {self.intensity}")
        if len(set(self.nodes)) != len(self.nodes):
            raise ConfigError("window lists a node twice")


@dataclass(frozen=True)
class SourceSchedule:
    """Piecewise-constant exogenous shock; ``S_i(t)`` sums the windows covering ``(i, t)``."""

    windows: tuple[Window, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "windows", tuple(self.windows))

    @classmethod
    def shock(cls, nodes: Iterable[int], intensity: float, duration: float, start: float = 0.0):
        nodes = tuple(nodes)
        if duration <= 0 or intensity == 0 or not nodes:
            return cls()
        return cls((Window(start, start + duration, nodes, intensity),))

    @classmethod
    def constant(cls, values: Sequence[float]):
        """Time-invariant source with per-node values."""
        values = np.asarray(values, dtype=float)
        return cls(tuple(Window(0.0, math.inf, (i,), float(v)) for i, v in enumerate(values) if v != 0))

    def validate(self, n: int) -> None:
        for w in self.windows:
            if w.nodes and (min(w.nodes) < 0 or max(w.nodes) >= n):
                raise ConfigError(f"source window references a node outside 0..{n - 1}")

    def rate(self, t: float, n: int) -> np.ndarray:
        s = np.zeros(n)
        for w in self.windows:
            if w.t_start <= t < w.t_end:
                s[list(w.nodes)] += w.intensity
        return s

    def total_intensity(self, t: float) -> float:
        """Network-integrated intensity ``I(t) = sum_i S_i(t)``."""
        return float(sum(w.intensity * len(w.nodes) for w in self.windows if w.t_start <= t < w.t_end))

    def integral(self, upto: float = math.inf) -> float:
        """Exact ``int_0^upto I(s) ds`` (infinite if an unbounded window is active)."""
        total = 0.0
        for w in self.windows:
            span = min(w.t_end, upto) - w.t_start
            if span > 0 and w.intensity > 0:
                total += w.intensity * len(w.nodes) * span
        return total

    @property
    def end_time(self) -> float:
        return max((w.t_end for w in self.windows), default=0.0)

    def scaled(self, factor: float) -> "SourceSchedule":
        return SourceSchedule(tuple(replace(w, intensity=w.intensity * factor) for w in self.windows))

    def calendar_segments(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Breakpoints ``b_0 = 0 < ... < b_m = inf`` and the value on each ``[b_s, b_s+1)``."""
        cuts = {0.0}
        for w in self.windows:
            cuts.update((w.t_start, w.t_end))
        bounds = np.array(sorted(c for c in cuts if math.isfinite(c)) + [math.inf])
        vals = np.array([self.rate(b, n) for b in bounds[:-1]]).reshape(len(bounds) - 1, n)
        return bounds, np.ascontiguousarray(vals)

    def step_segments(self, n: int, dt: float) -> tuple[np.ndarray, np.ndarray]:
        """Step-indexed segments: Euler step ``k`` uses the source at ``k dt``."""
        cuts = {0}
        for w in self.windows:
            for edge in (w.t_start, w.t_end):
                if math.isfinite(edge):
                    cuts.add(int(math.ceil(edge / dt - 1e-9)))
        starts = np.array(sorted(cuts), dtype=np.int64)
        vals = np.array([self.rate(k * dt, n) for k in starts]).reshape(len(starts), n)
        return starts, np.ascontiguousarray(vals)


@dataclass(frozen=True)
class EventLog:
    """Jump and absorption events in time order."""

    t: np.ndarray
    node: np.ndarray
    kind: np.ndarray
    regime: np.ndarray
    partner: np.ndarray
    before: np.ndarray
    after: np.ndarray

    @classmethod
    def from_kernel(cls, arrays, dt: float) -> "EventLog":
        step, node, kind, regime, partner, before, after = arrays
        order = np.argsort(step, kind="stable")
        return cls(step[order] * dt, node[order], kind[order], regime[order], partner[order],
                   before[order], after[order])

    @classmethod
    def empty(cls) -> "EventLog":
        z = np.zeros(0)
        zi = np.zeros(0, dtype=np.int64)
        return cls(z, zi, zi.astype(np.int8), zi.astype(np.int8), zi, z, z)

    def __len__(self) -> int:
        return len(self.t)

    def select(self, mask) -> "EventLog":
        return EventLog(*(getattr(self, f)[mask] for f in
                          ("t", "node", "kind", "regime", "partner", "before", "after")))

    @property
    def jumps(self) -> "EventLog":
        return self.select(self.kind == JUMP)

    @property
    def absorptions(self) -> "EventLog":
        return self.select(self.kind == ABSORB)

    def to_csv(self, path) -> Path:
        path = Path(path)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "node", "kind", "regime"])
            for t, i, k, r in zip(self.t, self.node, self.kind, self.regime):
                w.writerow([repr(float(t)), int(i), EVENT_KINDS[int(k)], REGIMES[int(r)]])
        return path


@dataclass(frozen=True)
class Trajectory:
    """Recorded states ``states[r]`` at ``times[r]`` plus the event log.

    ``regime`` holds one flag per Euler step (1 when the post-drift system
    mean was at or above the critical mass); it is all zeros for purely
    deterministic runs.
    """

    times: np.ndarray
    states: np.ndarray
    events: EventLog = field(default_factory=EventLog.empty)
    regime: np.ndarray | None = None
    dt: float = 0.0
    adopted: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.states.shape[1]

    @property
    def terminal(self) -> np.ndarray:
        return self.states[-1]

    def mean(self) -> np.ndarray:
        return self.states.mean(axis=1)

    def at(self, t: float) -> np.ndarray:
        """State at the last recorded time not after ``t``."""
        r = int(np.searchsorted(self.times, t + 1e-12, side="right")) - 1
        return self.states[max(r, 0)]

    def to_csv(self, path) -> Path:
        path = Path(path)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "node", "tau"])
            for t, row in zip(self.times, self.states):
                for i, v in enumerate(row):
                    w.writerow([repr(float(t)), i, repr(float(v))])
        return path


def _as_state(tau0, n: int, bounded: bool) -> np.ndarray:
    tau0 = np.array(tau0, dtype=float).reshape(-1)
    if tau0.shape != (n,):
        raise ConfigError(f"tau0 must have length {n}, got {tau0.shape[0]}")
    if not np.all(np.isfinite(tau0)):
        raise ConfigError("tau0 must be finite")
    if bounded and (tau0.min() < 0 or tau0.max() > 1):
        raise ConfigError("tau0 must lie in [0, 1]")
    return tau0


def run_kernel(ops, params, source, tau0, *, clamp, jumps=None, tables=None, seed=0,
               record_every=1, backend=None):
    """Shared driver for the deterministic and the jump-diffusion stepper."""
    n = ops.n
    params.check_stability(ops)
    source = source or SourceSchedule()
    source.validate(n)
    tau0 = _as_state(tau0, n, bounded=clamp)
    if record_every < 1:
        raise ConfigError("record_every must be >= 1")
    A = np.ascontiguousarray(params.drift_operator(ops))
    seg_start, seg_val = source.step_segments(n, params.dt)
    if jumps is None:
        mu0 = mu1 = 0.0
        tau_star, absorbing, level = 2.0, False, 2.0
        nbr = np.zeros((n, 1), dtype=np.int64)
        cum = np.full((n, 1), 2.0)
        deg = np.zeros(n, dtype=np.int64)
    else:
        mu0, mu1 = jumps.lambda0 * params.dt, jumps.lambda1 * params.dt
        tau_star, absorbing, level = jumps.tau_star, jumps.absorbing, jumps.absorb_level
        nbr, cum, deg = tables
    kern = _backend.get(backend)
    rec, states, regime, ev, adopted = kern.jump_diffusion(
        A, float(params.kappa), float(params.dt), params.n_steps, seg_start, seg_val, tau0,
        bool(clamp), float(mu0), float(mu1), float(tau_star), bool(absorbing), float(level),
        nbr, cum, deg, int(seed), int(record_every),
    )
    return Trajectory(
        times=rec * params.dt,
        states=states,
        events=EventLog.from_kernel(ev, params.dt),
        regime=regime,
        dt=params.dt,
        adopted=adopted,
    )


def integrate(
    ops: OperatorSet,
    params: ModelParams,
    source: SourceSchedule | None = None,
    tau0=None,
    *,
    clamp: bool = True,
    record_every: int = 1,
    backend: str | None = None,
) -> Trajectory:
    """Explicit-Euler solution of the master equation up to ``params.t_end``.

    Parameters
    ----------
    ops : OperatorSet
    params : ModelParams
        The stability bound ``dt < 2 / (kappa + rho(A))`` is checked first.
    source : SourceSchedule, optional
        Step ``k`` uses ``S(k dt)``.
    tau0 : array_like, optional
        Initial state (zeros by default). Must lie in ``[0, 1]`` when clamped.
    clamp : bool
        Clip to ``[0, 1]`` after every step. Turn off for linear-theory checks.
    record_every : int
        Keep every ``record_every``-th state (the final state is always kept).

    Raises
    ------
    StabilityError
        If ``dt`` is too large; the message reports the admissible bound.
    """
    if tau0 is None:
        tau0 = np.zeros(ops.n)
    return run_kernel(ops, params, source, tau0, clamp=clamp, record_every=record_every,
                      backend=backend)


def resolvent_matrix(ops: OperatorSet, params: ModelParams) -> np.ndarray:
    """``M = kappa I - A``."""
    return params.kappa * np.eye(ops.n) - params.drift_operator(ops)


def factor_resolvent(ops: OperatorSet, params: ModelParams):
    """Cholesky factor of ``M`` after checking it is positive definite."""
    M = resolvent_matrix(ops, params)
    M = 0.5 * (M + M.T)
    lam_min = float(np.linalg.eigvalsh(M)[0])
    if not lam_min > 0:
        raise IndefiniteOperatorError(lam_min)
    return linalg.cho_factor(M)


def steady_state(ops: OperatorSet, params: ModelParams, source) -> np.ndarray:
    """Unclamped linear steady state ``tau* = M^{-1} S`` for a constant source vector.

    Raises
    ------
    IndefiniteOperatorError
        If ``M`` is singular or indefinite; carries the smallest eigenvalue.
    """
    S = np.asarray(source, dtype=float).reshape(-1)
    if S.shape != (ops.n,):
        raise ConfigError(f"source vector must have length {ops.n}")
    return linalg.cho_solve(factor_resolvent(ops, params), S)


def ou_stationary_variance(
    kappa: float,
    sigma: float,
    horizon: float,
    dt: float = 0.01,
    seed: int = 0,
    n_paths: int = 1,
    burn_in: float | None = None,
) -> float:
    """Long-run sample variance of ``d tau = -kappa tau dt + sigma dB``.

    Each path starts at 0, is advanced by Euler-Maruyama and discards the
    first ``burn_in`` time units (default ``10 / kappa``). The variance is
    averaged over ``n_paths`` independent paths; its expectation is close to
    ``sigma^2 / (2 kappa)`` (Euler inflates it by ``1 / (1 - kappa dt / 2)``).
    """
    if not kappa > 0 or sigma < 0 or not dt > 0 or not horizon > 0 or n_paths < 1:
        raise ConfigError("need kappa > 0, sigma >= 0, dt > 0, horizon > 0, n_paths >= 1")
    if kappa * dt >= 1:
        raise StabilityError(dt, 1.0 / kappa)
    if sigma == 0:
        return 0.0
    burn = int(round((10.0 / kappa if burn_in is None else burn_in) / dt))
    steps = int(round(horizon / dt))
    if steps < 2:
        raise ConfigError("horizon too short for the step size")
    rng = np.random.default_rng(seed)
    total = 0.0
    for _ in range(n_paths):
        shocks = sigma * math.sqrt(dt) * rng.standard_normal(burn + steps)
        path = lfilter([1.0], [1.0, -(1.0 - kappa * dt)], shocks)[burn:]
        total += path.var(ddof=1)
    return total / n_paths
