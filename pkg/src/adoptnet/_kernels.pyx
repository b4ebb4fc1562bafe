# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: the jump-diffusion stepper and the Feynman-Kac walker.

Semantics are identical to ``_pykernels``; see that module for the contract.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log1p, INFINITY
from libc.stdint cimport uint64_t, int64_t, int8_t, uint8_t

cnp.import_array()

NAME = "cython"

cdef enum:
    MAX_DRAWS = 256

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double TWO_M53 = 1.0 / 9007199254740992.0


cdef inline uint64_t _mix(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline double _uniform(uint64_t seed, uint64_t a, uint64_t b, uint64_t c) noexcept nogil:
    cdef uint64_t z = _mix(seed + GOLDEN)
    z = _mix(z + a + GOLDEN)
    z = _mix(z + b + GOLDEN)
    z = _mix(z + c + GOLDEN)
    return <double>(z >> 11) * TWO_M53


def uniforms(seed, a, b, c):
    """Scalar twin of ``_pykernels.uniforms`` (used for cross-checks)."""
    cdef uint64_t s = <uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)
    return _uniform(s, <uint64_t>(int(a) & 0xFFFFFFFFFFFFFFFF),
                    <uint64_t>(int(b) & 0xFFFFFFFFFFFFFFFF),
                    <uint64_t>(int(c) & 0xFFFFFFFFFFFFFFFF))


cdef inline Py_ssize_t _pick(const double[:, ::1] cum, Py_ssize_t row, int64_t deg,
                             double u) noexcept nogil:
    cdef Py_ssize_t d
    for d in range(deg):
        if cum[row, d] > u:
            return d
    return deg - 1


cdef inline int64_t _poisson_count(double u, double mu, double p0) noexcept nogil:
    cdef int64_t count = 1
    cdef double p, c
    if p0 == 0.0:
        return MAX_DRAWS
    p = p0 * mu
    c = p0 + p
    while u >= c and count < MAX_DRAWS:
        count += 1
        p = p * mu / count
        c = c + p
    return count


cdef class _Events:
    cdef public object step, node, kind, regime, partner, before, after
    cdef Py_ssize_t size, cap

    def __init__(self, Py_ssize_t cap):
        self.cap = max(cap, 16)
        self.size = 0
        self.step = np.empty(self.cap, dtype=np.int64)
        self.node = np.empty(self.cap, dtype=np.int64)
        self.kind = np.empty(self.cap, dtype=np.int8)
        self.regime = np.empty(self.cap, dtype=np.int8)
        self.partner = np.empty(self.cap, dtype=np.int64)
        self.before = np.empty(self.cap, dtype=np.float64)
        self.after = np.empty(self.cap, dtype=np.float64)

    cdef int _grow(self) except -1:
        self.cap *= 2
        for name in ("step", "node", "kind", "regime", "partner", "before", "after"):
            old = getattr(self, name)
            new = np.empty(self.cap, dtype=old.dtype)
            new[: self.size] = old[: self.size]
            setattr(self, name, new)
        return 0

    cdef int push(self, int64_t step, int64_t node, int8_t kind, int8_t regime,
                  int64_t partner, double before, double after) except -1:
        cdef int64_t[::1] i64
        cdef int8_t[::1] i8
        cdef double[::1] f64
        if self.size == self.cap:
            self._grow()
        i64 = self.step; i64[self.size] = step
        i64 = self.node; i64[self.size] = node
        i8 = self.kind; i8[self.size] = kind
        i8 = self.regime; i8[self.size] = regime
        i64 = self.partner; i64[self.size] = partner
        f64 = self.before; f64[self.size] = before
        f64 = self.after; f64[self.size] = after
        self.size += 1
        return 0

    def arrays(self):
        m = self.size
        return (self.step[:m].copy(), self.node[:m].copy(), self.kind[:m].copy(),
                self.regime[:m].copy(), self.partner[:m].copy(),
                self.before[:m].copy(), self.after[:m].copy())


def jump_diffusion(const double[:, ::1] A, double kappa, double dt, Py_ssize_t nsteps,
                   const int64_t[::1] seg_start, const double[:, ::1] seg_val,
                   const double[::1] tau0, bint clamp,
                   double mu0, double mu1, double tau_star,
                   bint absorbing, double absorb_level,
                   const int64_t[:, ::1] nbr, const double[:, ::1] cum,
                   const int64_t[::1] deg, seed, Py_ssize_t record_every):
    cdef Py_ssize_t n = tau0.shape[0]
    cdef Py_ssize_t i, j, k, d, r, seg = 0, nseg = seg_start.shape[0]
    cdef uint64_t useed = <uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef double acc, total, mu, p0, u, ud, val, best
    cdef int64_t count, best_j, col
    cdef bint above

    tau_arr = np.array(tau0, dtype=np.float64)
    new_arr = np.empty(n, dtype=np.float64)
    snap_arr = np.empty(n, dtype=np.float64)
    adopted_arr = np.zeros(n, dtype=np.uint8)
    cdef double[::1] tau = tau_arr
    cdef double[::1] new = new_arr
    cdef double[::1] snap = snap_arr
    cdef uint8_t[::1] adopted = adopted_arr

    cdef Py_ssize_t nrec = nsteps // record_every + (1 if nsteps % record_every else 0) + 1
    states_arr = np.empty((nrec, n), dtype=np.float64)
    rec_arr = np.empty(nrec, dtype=np.int64)
    regime_arr = np.zeros(nsteps, dtype=np.uint8)
    cdef double[:, ::1] states = states_arr
    cdef int64_t[::1] rec_steps = rec_arr
    cdef uint8_t[::1] regime = regime_arr
    cdef _Events events = _Events(4 * n)

    cdef double p00 = exp(-mu0)
    cdef double p01 = exp(-mu1)

    if absorbing:
        for i in range(n):
            if tau[i] >= absorb_level:
                events.push(0, i, 1, 0, i, tau[i], 1.0)
                adopted[i] = 1
                tau[i] = 1.0
    for i in range(n):
        states[0, i] = tau[i]
    rec_steps[0] = 0
    r = 1

    for k in range(nsteps):
        while seg + 1 < nseg and k >= seg_start[seg + 1]:
            seg += 1
        total = 0.0
        for i in range(n):
            acc = 0.0
            for j in range(n):
                acc += A[i, j] * tau[j]
            new[i] = tau[i] + dt * (acc - kappa * tau[i] + seg_val[seg, i])
            if clamp:
                if new[i] < 0.0:
                    new[i] = 0.0
                elif new[i] > 1.0:
                    new[i] = 1.0
            if adopted[i]:
                new[i] = 1.0
        for i in range(n):
            tau[i] = new[i]
            total += tau[i]

        above = total / n >= tau_star
        regime[k] = above
        if above:
            mu = mu1
            p0 = p01
        else:
            mu = mu0
            p0 = p00
        if mu > 0.0:
            for i in range(n):
                snap[i] = tau[i]
            for i in range(n):
                if deg[i] == 0:
                    continue
                u = _uniform(useed, k, i, 0)
                if u < p0:
                    continue
                count = _poisson_count(u, mu, p0)
                best = -INFINITY
                best_j = -1
                for d in range(count):
                    ud = _uniform(useed, k, i, 1 + d)
                    col = _pick(cum, i, deg[i], ud)
                    j = nbr[i, col]
                    if snap[j] > best:
                        best = snap[j]
                        best_j = j
                val = tau[i]
                if best > val:
                    tau[i] = best
                events.push(k + 1, i, 0, above, best_j, val, tau[i])
        if absorbing:
            for i in range(n):
                if not adopted[i] and tau[i] >= absorb_level:
                    events.push(k + 1, i, 1, above, i, tau[i], 1.0)
                    adopted[i] = 1
                    tau[i] = 1.0
        if (k + 1) % record_every == 0 or k + 1 == nsteps:
            for i in range(n):
                states[r, i] = tau[i]
            rec_steps[r] = k + 1
            r += 1

    return (rec_arr[:r], states_arr[:r], regime_arr, events.arrays(),
            adopted_arr.astype(bool))


cdef inline double _source_integral(Py_ssize_t cur, double ua, double ub,
                                    const double[::1] bounds, const double[:, ::1] seg_val,
                                    double kappa, double t) noexcept nogil:
    cdef Py_ssize_t s
    cdef double lo, hi, v, acc = 0.0
    for s in range(seg_val.shape[0]):
        lo = ua if ua > t - bounds[s + 1] else t - bounds[s + 1]
        hi = ub if ub < t - bounds[s] else t - bounds[s]
        v = seg_val[s, cur]
        if hi > lo and v != 0.0:
            acc += v * (exp(-kappa * lo) - exp(-kappa * hi)) / kappa
    return acc


def fk_paths(const int64_t[:, ::1] nbr, const double[:, ::1] cum, const double[::1] q,
             const double[::1] bounds, const double[:, ::1] seg_val, const double[::1] tau0,
             double kappa, double t, Py_ssize_t start, Py_ssize_t n_paths,
             path_offset, seed):
    cdef uint64_t useed = <uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t offset = <uint64_t>int(path_offset)
    cdef uint64_t gid, h
    cdef Py_ssize_t p, cur, deg
    cdef double elapsed, reach, ub, hold, rate, u, total
    cdef double final_weight = exp(-kappa * t)
    out_arr = np.empty(n_paths, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t width = cum.shape[1]

    with nogil:
        for p in range(n_paths):
            gid = offset + <uint64_t>p
            cur = start
            elapsed = 0.0
            total = 0.0
            h = 0
            while True:
                rate = q[cur]
                u = _uniform(useed, <uint64_t>start, gid, 2 * h)
                if rate > 0.0:
                    hold = -log1p(-u) / rate
                else:
                    hold = INFINITY
                reach = elapsed + hold
                ub = reach if reach < t else t
                total += _source_integral(cur, elapsed, ub, bounds, seg_val, kappa, t)
                if reach >= t:
                    total += final_weight * tau0[cur]
                    break
                elapsed = reach
                u = _uniform(useed, <uint64_t>start, gid, 2 * h + 1)
                deg = 0
                while deg < width and cum[cur, deg] <= u:
                    deg += 1
                cur = nbr[cur, deg]
                h += 1
            out[p] = total
    return out_arr
