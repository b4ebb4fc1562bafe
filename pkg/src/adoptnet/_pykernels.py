"""Pure numpy implementations of the hot kernels.

These mirror ``_kernels.pyx`` operation for operation, including the
counter-based random stream, so the two backends agree up to the last-ulp
differences between numpy's and libm's ``exp``/``log``.
"""
from __future__ import annotations

import numpy as np

NAME = "python"

_MASK = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_C1 = np.uint64(0xBF58476D1CE4E5B9)
_C2 = np.uint64(0x94D049BB133111EB)
_TWO_M53 = 2.0 ** -53
MAX_DRAWS = 256

JUMP = 0
ABSORB = 1


def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _C1
    z = (z ^ (z >> np.uint64(27))) * _C2
    return z ^ (z >> np.uint64(31))


def uniforms(seed, a, b, c):
    """Stateless uniforms on [0, 1) keyed by ``(seed, a, b, c)``.

    Arguments broadcast; all keys are reduced modulo 2**64.
    """
    with np.errstate(over="ignore"):
        s = np.asarray(int(seed) & _MASK, dtype=np.uint64)
        a = np.asarray(a).astype(np.uint64)
        b = np.asarray(b).astype(np.uint64)
        c = np.asarray(c).astype(np.uint64)
        z = _mix(s + _GOLDEN)
        z = _mix(z + a + _GOLDEN)
        z = _mix(z + b + _GOLDEN)
        z = _mix(z + c + _GOLDEN)
    return (z >> np.uint64(11)).astype(np.float64) * _TWO_M53


def _pick(cum, rows, u):
    # first column with cum > u; rows padded with 2.0 beyond the degree
    return np.count_nonzero(cum[rows] <= u[:, None], axis=1)


def _poisson_counts(u, mu, p0):
    """Inverse-CDF Poisson counts for ``u >= p0`` (i.e. at least one event)."""
    count = np.ones(u.shape, dtype=np.int64)
    if p0 == 0.0:
        count[:] = MAX_DRAWS
        return count
    p = p0 * mu
    c = p0 + p
    more = (u >= c) & (count < MAX_DRAWS)
    k = 1
    while more.any():
        k += 1
        p = p * mu / k
        c = c + p
        count[more] += 1
        more &= (u >= c) & (count < MAX_DRAWS)
    return count


class _EventBuffer:
    def __init__(self):
        self.rows = []

    def extend(self, step, nodes, kind, regime, partner, before, after):
        if len(nodes) == 0:
            return
        m = len(nodes)
        self.rows.append(
            (
                np.full(m, step, dtype=np.int64),
                np.asarray(nodes, dtype=np.int64),
                np.full(m, kind, dtype=np.int8),
                np.full(m, regime, dtype=np.int8),
                np.asarray(partner, dtype=np.int64),
                np.asarray(before, dtype=np.float64),
                np.asarray(after, dtype=np.float64),
            )
        )

    def arrays(self):
        if not self.rows:
            return (
                np.zeros(0, np.int64),
                np.zeros(0, np.int64),
                np.zeros(0, np.int8),
                np.zeros(0, np.int8),
                np.zeros(0, np.int64),
                np.zeros(0),
                np.zeros(0),
            )
        return tuple(np.concatenate(cols) for cols in zip(*self.rows))


def jump_diffusion(
    A,
    kappa,
    dt,
    nsteps,
    seg_start,
    seg_val,
    tau0,
    clamp,
    mu0,
    mu1,
    tau_star,
    absorbing,
    absorb_level,
    nbr,
    cum,
    deg,
    seed,
    record_every,
):
    """Explicit-Euler drift plus copy-max jumps and absorption.

    Returns ``(rec_steps, states, regime, events, adopted)`` where ``events``
    is a tuple of arrays ``(step, node, kind, regime, partner, before, after)``.
    """
    n = tau0.shape[0]
    tau = np.array(tau0, dtype=np.float64)
    adopted = np.zeros(n, dtype=bool)
    events = _EventBuffer()
    if absorbing:
        hit = np.nonzero(tau >= absorb_level)[0]
        events.extend(0, hit, ABSORB, 0, hit, tau[hit], np.ones(len(hit)))
        adopted[hit] = True
        tau[hit] = 1.0

    nrec = nsteps // record_every + (1 if nsteps % record_every else 0) + 1
    states = np.empty((nrec, n))
    rec_steps = np.empty(nrec, dtype=np.int64)
    states[0] = tau
    rec_steps[0] = 0
    r = 1
    regime = np.zeros(nsteps, dtype=np.uint8)
    p00 = np.exp(-mu0)
    p01 = np.exp(-mu1)
    nodes = np.arange(n)
    seg = 0
    nseg = seg_start.shape[0]

    for k in range(nsteps):
        while seg + 1 < nseg and k >= seg_start[seg + 1]:
            seg += 1
        drift = A @ tau - kappa * tau + seg_val[seg]
        new = tau + dt * drift
        if clamp:
            np.clip(new, 0.0, 1.0, out=new)
        new[adopted] = 1.0
        tau = new

        above = tau.sum() / n >= tau_star
        regime[k] = above
        mu, p0 = (mu1, p01) if above else (mu0, p00)
        if mu > 0.0:
            u = uniforms(seed, k, nodes, 0)
            firing = nodes[(u >= p0) & (deg > 0)]
            if firing.size:
                counts = _poisson_counts(u[firing], mu, p0)
                snap = tau.copy()
                best_val = np.full(firing.size, -np.inf)
                best_j = np.full(firing.size, -1, dtype=np.int64)
                for d in range(int(counts.max())):
                    live = counts > d
                    ud = uniforms(seed, k, firing, 1 + d)
                    cols = _pick(cum, firing, ud)
                    cand = nbr[firing, np.minimum(cols, nbr.shape[1] - 1)]
                    vals = snap[cand]
                    better = live & (vals > best_val)
                    best_val = np.where(better, vals, best_val)
                    best_j = np.where(better, cand, best_j)
                before = tau[firing]
                after = np.maximum(before, best_val)
                tau[firing] = after
                events.extend(k + 1, firing, JUMP, int(above), best_j, before, after)
        if absorbing:
            hit = nodes[(~adopted) & (tau >= absorb_level)]
            if hit.size:
                events.extend(k + 1, hit, ABSORB, int(above), hit, tau[hit], np.ones(hit.size))
                adopted[hit] = True
                tau[hit] = 1.0
        if (k + 1) % record_every == 0 or k + 1 == nsteps:
            states[r] = tau
            rec_steps[r] = k + 1
            r += 1
    return rec_steps[:r], states[:r], regime, events.arrays(), adopted


def _source_integral(cur, ua, ub, bounds, seg_val, kappa, t):
    acc = np.zeros(cur.shape[0])
    for s in range(seg_val.shape[0]):
        lo = np.maximum(ua, t - bounds[s + 1])
        hi = np.minimum(ub, t - bounds[s])
        v = seg_val[s, cur]
        ok = (hi > lo) & (v != 0.0)
        if ok.any():
            acc[ok] += v[ok] * (np.exp(-kappa * lo[ok]) - np.exp(-kappa * hi[ok])) / kappa
    return acc


def fk_paths(nbr, cum, q, bounds, seg_val, tau0, kappa, t, start, n_paths, path_offset, seed):
    """Per-path Feynman-Kac samples for a continuous-time walk from ``start``.

    Each path draws uniform ``2h`` for its h-th holding time and ``2h + 1``
    for the h-th move, keyed by ``(seed, start, path id)``.
    """
    gid = np.arange(path_offset, path_offset + n_paths, dtype=np.uint64)
    cur = np.full(n_paths, start, dtype=np.int64)
    elapsed = np.zeros(n_paths)
    acc = np.zeros(n_paths)
    live = np.arange(n_paths)
    h = 0
    final_weight = np.exp(-kappa * t)
    while live.size:
        c = cur[live]
        u = uniforms(seed, start, gid[live], 2 * h)
        rate = q[c]
        with np.errstate(divide="ignore"):
            hold = np.where(rate > 0.0, -np.log1p(-u) / np.where(rate > 0.0, rate, 1.0), np.inf)
        ua = elapsed[live]
        reach = ua + hold
        ub = np.minimum(reach, t)
        acc[live] += _source_integral(c, ua, ub, bounds, seg_val, kappa, t)
        done = reach >= t
        fin = live[done]
        acc[fin] += final_weight * tau0[cur[fin]]
        go = live[~done]
        if go.size:
            elapsed[go] = reach[~done]
            u2 = uniforms(seed, start, gid[go], 2 * h + 1)
            cols = _pick(cum, cur[go], u2)
            cur[go] = nbr[cur[go], cols]
        live = go
        h += 1
    return acc
