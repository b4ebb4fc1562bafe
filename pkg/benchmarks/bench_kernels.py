"""Compare the compiled and numpy kernel backends.

Usage: ``python benchmarks/bench_kernels.py [--repeat 5] [--n 30]``.
Prints the best wall time per workload and backend, and the speedup.
"""
import argparse
import time

import numpy as np

from adoptnet import _backend
from adoptnet.dynamics import ModelParams, SourceSchedule, integrate
from adoptnet.feynman_kac import estimate, make_walk_generator
from adoptnet.graph import build_operators, generate_network
from adoptnet.jumps import JumpParams, simulate_jump_diffusion


def workloads(n):
    ops = build_operators(generate_network("random", n, {"p": min(1.0, 4.5 / n)}, seed=0))
    p = ModelParams(0.8, 1.2, 0.4, 0.1, dt=0.01, t_end=50.0)
    src = SourceSchedule.shock(range(int(0.6 * n)), 0.4, 5.0)
    jp = JumpParams(0.05, 10.0, 0.35)
    walks = make_walk_generator(ops, p.with_(lambda_x=0.0))
    tau0 = np.random.default_rng(0).uniform(0, 0.5, n)
    return {
        "integrate (5000 steps)": lambda b: integrate(ops, p, src, None, backend=b),
        "jump-diffusion (5000 steps)": lambda b: simulate_jump_diffusion(ops, p, jp, src, None, seed=1, backend=b),
        "path estimator (20000 paths)": lambda b: estimate(walks, 0.1, src, tau0, 0, 10.0, 20_000, seed=1, backend=b),
    }


def best_time(fn, repeat):
    fn()  # warm-up
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--n", type=int, default=30)
    args = ap.parse_args()
    backends = _backend.available()
    print(f"backends: {', '.join(backends)}; n={args.n}; best of {args.repeat}")
    print(f"{'workload':<30}" + "".join(f"{b:>12}" for b in backends) + ("     speedup" if len(backends) > 1 else ""))
    for name, fn in workloads(args.n).items():
        t = {b: best_time(lambda: fn(b), args.repeat) for b in backends}
        row = f"{name:<30}" + "".join(f"{t[b] * 1e3:>10.1f}ms" for b in backends)
        if len(backends) > 1:
            row += f"{t['python'] / t['cython']:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
