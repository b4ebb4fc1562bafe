"""Spatial-network instances and the linear operators built on them.

A :class:`SpatialNetwork` couples planar coordinates with a business
relationship adjacency ``G``. The spatial coupling ``W`` is derived from the
coordinates by a kernel, so the geographic channel exists independently of
``G``. :func:`build_operators` turns both into graph Laplacians and a
symmetrized interaction operator.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import ConfigError, ConstructionError

KINDS = ("random", "scale_free", "clustered")
DEFAULT_GENERATOR_PARAMS = {"random": {"p": 0.15}, "scale_free": {"m": 2}, "clustered": {"k": 4}}
MAX_ATTEMPTS = 100


@dataclass(frozen=True)
class Knn:
    """Symmetrized k-nearest-neighbour kernel with unit weights."""

    k: int = 4

    def __post_init__(self):
        if int(self.k) < 1:
            raise ConfigError(f"knn kernel needs k >= 1, got {self.k}")

    def __str__(self):
        return f"knn:{self.k}"


@dataclass(frozen=True)
class Gaussian:
    """``W_ij = exp(-d_ij^2 / (2 b^2))`` with the diagonal zeroed."""

    bandwidth: float

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ConfigError(f"gaussian kernel needs bandwidth > 0, got {self.bandwidth}")

    def __str__(self):
        return f"gaussian:{self.bandwidth:g}"


def parse_kernel(spec: str | Knn | Gaussian) -> Knn | Gaussian:
    """Parse ``"knn:4"`` or ``"gaussian:0.25"`` (kernel objects pass through)."""
    if isinstance(spec, (Knn, Gaussian)):
        return spec
    name, _, arg = str(spec).partition(":")
    name = name.strip().lower()
    try:
        if name == "knn":
            return Knn(int(arg) if arg else 4)
        if name == "gaussian":
            return Gaussian(float(arg))
    except ValueError as exc:
        raise ConfigError(f"bad spatial kernel {spec!r}: {exc}") from exc
    raise ConfigError(f"unknown spatial kernel {spec!r} (expected knn:K or gaussian:B)")


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SpatialNetwork:
    """Institutions with planar coordinates, adjacency ``G`` and spatial weights ``W``."""

    coords: np.ndarray
    adjacency: np.ndarray
    spatial_weights: np.ndarray
    kernel: str = "knn:4"
    meta: Mapping = field(default_factory=dict, compare=False)

    def __post_init__(self):
        coords = _frozen(self.coords)
        G = _frozen(self.adjacency)
        W = _frozen(self.spatial_weights)
        n = coords.shape[0]
        if coords.ndim != 2 or coords.shape[1] != 2:
            raise ConfigError(f"coords must be n x 2, got shape {coords.shape}")
        if n < 2:
            raise ConfigError("a spatial network needs at least 2 nodes")
        if not np.all(np.isfinite(coords)):
            raise ConfigError("coordinates must be finite")
        for name, M in (("adjacency", G), ("spatial_weights", W)):
            if M.shape != (n, n):
                raise ConfigError(f"{name} must be {n} x {n}, got {M.shape}")
            if not np.all(np.isfinite(M)) or np.any(M < 0):
                raise ConfigError(f"{name} entries must be finite and nonnegative")
            if np.any(np.diag(M) != 0):
                raise ConfigError(f"{name} must have a zero diagonal")
            if not np.array_equal(M, M.T):
                raise ConfigError(f"{name} must be symmetric")
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "adjacency", G)
        object.__setattr__(self, "spatial_weights", W)

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def degree(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    def edges(self) -> list[tuple[int, int, float]]:
        i, j = np.nonzero(np.triu(self.adjacency, 1))
        return [(int(a), int(b), float(self.adjacency[a, b])) for a, b in zip(i, j)]

    def components(self) -> np.ndarray:
        """Connected-component label of every node (network channel only)."""
        return connected_components(self.adjacency > 0, directed=False)[1]

    def is_connected(self) -> bool:
        return connected_components(self.adjacency > 0, directed=False)[0] == 1

    def with_kernel(self, kernel) -> "SpatialNetwork":
        kernel = parse_kernel(kernel)
        return SpatialNetwork(self.coords, self.adjacency, spatial_weights(self.coords, kernel),
                              str(kernel), self.meta)


def _distances(coords):
    diff = coords[:, None, :] - coords[None, :, :]
    return np.sqrt((diff ** 2).sum(axis=2))


def knn_adjacency(coords: np.ndarray, k: int) -> np.ndarray:
    """Unit-weight symmetrized kNN graph; equal distances tie-break by node index."""
    n = coords.shape[0]
    k = min(int(k), n - 1)
    d = _distances(coords)
    W = np.zeros((n, n))
    idx = np.arange(n)
    for i in range(n):
        di = d[i].copy()
        di[i] = np.inf
        order = np.lexsort((idx, di))
        W[i, order[:k]] = 1.0
    return np.maximum(W, W.T)


def spatial_weights(coords: np.ndarray, kernel) -> np.ndarray:
    kernel = parse_kernel(kernel)
    coords = np.asarray(coords, dtype=float)
    if isinstance(kernel, Knn):
        return knn_adjacency(coords, kernel.k)
    d = _distances(coords)
    W = np.exp(-(d ** 2) / (2.0 * kernel.bandwidth ** 2))
    np.fill_diagonal(W, 0.0)
    return W


def _erdos_renyi(n, p, rng):
    upper = np.triu(rng.random((n, n)) < p, 1)
    G = upper.astype(float)
    return G + G.T


def _barabasi_albert(n, m, rng):
    # seed clique on max(m, 2) nodes, then each new node attaches to m
    # distinct existing nodes with probability proportional to degree
    m0 = max(m, 2)
    G = np.zeros((n, n))
    G[:m0, :m0] = 1.0
    np.fill_diagonal(G, 0.0)
    deg = G.sum(axis=1)
    for v in range(m0, n):
        w = deg[:v] / deg[:v].sum()
        targets = rng.choice(v, size=m, replace=False, p=w)
        G[v, targets] = G[targets, v] = 1.0
        deg[targets] += 1
        deg[v] = m
    return G


def _check_params(kind, n, params):
    if kind not in KINDS:
        raise ConfigError(f"unknown network kind {kind!r}; choose from {KINDS}")
    if int(n) < 2:
        raise ConfigError(f"n must be >= 2, got {n}")
    merged = dict(DEFAULT_GENERATOR_PARAMS[kind])
    merged.update({k: v for k, v in (params or {}).items() if k in merged})
    if kind == "random" and not 0 < merged["p"] <= 1:
        raise ConfigError(f"edge probability must be in (0, 1], got {merged['p']}")
    if kind == "scale_free" and not 1 <= int(merged["m"]) < n:
        raise ConfigError(f"attachment count must satisfy 1 <= m < n, got {merged['m']}")
    if kind == "clustered" and not 1 <= int(merged["k"]) < n:
        raise ConfigError(f"neighbor count must satisfy 1 <= k < n, got {merged['k']}")
    return merged


def generate_network(
    kind: str,
    n: int,
    params: Mapping | None = None,
    seed: int = 0,
    spatial_kernel="knn:4",
) -> SpatialNetwork:
    """Generate a connected random, scale-free or clustered spatial network.

    Coordinates are uniform on the unit square. ``random`` is Erdos-Renyi
    G(n, p); ``scale_free`` is Barabasi-Albert preferential attachment from a
    seed clique on ``max(m, 2)`` nodes; ``clustered`` links every node to its
    ``k`` nearest geographic neighbours (symmetrized). Disconnected draws are
    regenerated with an incremented seed salt, at most 100 times.
    """
    params = _check_params(kind, n, params)
    n = int(n)
    kernel = parse_kernel(spatial_kernel)
    for attempt in range(MAX_ATTEMPTS):
        rng = np.random.default_rng([int(seed) & ((1 << 63) - 1), attempt])
        coords = rng.random((n, 2))
        if kind == "random":
            G = _erdos_renyi(n, params["p"], rng)
        elif kind == "scale_free":
            G = _barabasi_albert(n, int(params["m"]), rng)
        else:
            G = knn_adjacency(coords, int(params["k"]))
        if connected_components(G > 0, directed=False)[0] == 1:
            meta = {"kind": kind, "params": params, "seed": int(seed), "attempt": attempt}
            return SpatialNetwork(coords, G, spatial_weights(coords, kernel), str(kernel), meta)
    raise ConstructionError(
        f"could not generate a connected {kind} network with n={n}, params={params} "
        f"in {MAX_ATTEMPTS} attempts"
    )


def laplacian(weights: np.ndarray) -> np.ndarray:
    """Graph Laplacian action ``(L x)_i = sum_j w_ij (x_j - x_i)``."""
    L = np.array(weights, dtype=float)
    np.fill_diagonal(L, 0.0)
    L[np.diag_indices_from(L)] = -L.sum(axis=1)
    return L


@dataclass(frozen=True)
class OperatorSet:
    """Spatial Laplacian, network Laplacian and interaction operator."""

    L_s: np.ndarray
    L_n: np.ndarray
    L_x: np.ndarray
    interaction_scale: float = 1.0

    @property
    def n(self) -> int:
        return self.L_s.shape[0]

    def combine(self, nu_s: float, nu_n: float, lambda_x: float) -> np.ndarray:
        """``nu_s L_s + nu_n L_n + lambda_x L_x``."""
        return nu_s * self.L_s + nu_n * self.L_n + lambda_x * self.L_x


def build_operators(net: SpatialNetwork, spatial_kernel=None) -> OperatorSet:
    """Derive ``L_s``, ``L_n`` and the rescaled interaction operator ``L_x``.

    ``L_x`` is the symmetrized product ``(L_s L_n + L_n L_s)/2`` divided by
    ``max(1, spectral radius)``. Passing ``spatial_kernel`` recomputes ``W``
    from the coordinates; otherwise the network's stored weights are used.
    """
    W = net.spatial_weights if spatial_kernel is None else spatial_weights(net.coords, spatial_kernel)
    L_s = laplacian(W)
    L_n = laplacian(net.adjacency)
    X = 0.5 * (L_s @ L_n + L_n @ L_s)
    X = 0.5 * (X + X.T)
    radius = float(np.abs(np.linalg.eigvalsh(X)).max())
    scale = max(1.0, radius)
    ops = OperatorSet(L_s, L_n, X / scale, scale)
    for M in (ops.L_s, ops.L_n, ops.L_x):
        M.setflags(write=False)
    return ops


def save_network(net: SpatialNetwork, directory: str | Path) -> tuple[Path, Path]:
    """Write ``edges.csv`` (i,j,weight) and ``coords.csv`` (i,x,y)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    edges_path, coords_path = directory / "edges.csv", directory / "coords.csv"
    with open(edges_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "j", "weight"])
        for i, j, weight in net.edges():
            w.writerow([i, j, repr(weight)])
    with open(coords_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "x", "y"])
        for i, (x, y) in enumerate(net.coords):
            w.writerow([i, repr(float(x)), repr(float(y))])
    return edges_path, coords_path


def load_network(edges_csv, coords_csv, spatial_kernel="knn:4") -> SpatialNetwork:
    """Read a network written by :func:`save_network` (0-based ids, header row)."""
    with open(coords_csv, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or not {"i", "x", "y"} <= set(rows[0]):
        raise ConfigError(f"{coords_csv}: expected header i,x,y")
    n = len(rows)
    coords = np.zeros((n, 2))
    seen = set()
    for r in rows:
        i = int(r["i"])
        if not 0 <= i < n or i in seen:
            raise ConfigError(f"{coords_csv}: bad or duplicate node id {i}")
        seen.add(i)
        coords[i] = float(r["x"]), float(r["y"])
    G = np.zeros((n, n))
    with open(edges_csv, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"i", "j", "weight"} <= set(reader.fieldnames):
            raise ConfigError(f"{edges_csv}: expected header i,j,weight")
        for r in reader:
            i, j, wt = int(r["i"]), int(r["j"]), float(r["weight"])
            if not (0 <= i < n and 0 <= j < n) or i == j:
                raise ConfigError(f"{edges_csv}: bad edge ({i}, {j})")
            G[i, j] = G[j, i] = wt
    kernel = parse_kernel(spatial_kernel)
    return SpatialNetwork(coords, G, spatial_weights(coords, kernel), str(kernel))


def transition_table(weights: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Padded neighbour lists with cumulative move probabilities.

    Returns ``(nbr, cum, deg)``: row ``i`` of ``nbr`` lists the nodes with
    positive weight, ``cum`` the matching normalized cumulative weights (last
    real entry exactly 1, padding 2.0), ``deg`` the neighbour counts.
    """
    w = np.array(weights, dtype=float)
    np.fill_diagonal(w, 0.0)
    n = w.shape[0]
    deg = np.count_nonzero(w > 0, axis=1).astype(np.int64)
    width = max(1, int(deg.max(initial=0)))
    nbr = np.zeros((n, width), dtype=np.int64)
    cum = np.full((n, width), 2.0)
    for i in range(n):
        (js,) = np.nonzero(w[i] > 0)
        if js.size == 0:
            continue
        c = np.cumsum(w[i, js]) / w[i, js].sum()
        c[-1] = 1.0
        nbr[i, : js.size] = js
        nbr[i, js.size:] = js[-1]
        cum[i, : js.size] = c
    return nbr, cum, deg
