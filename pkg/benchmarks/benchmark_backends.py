"""Timing comparison of the numba kernels against the numpy fallback.

Runs each hot kernel on a representative workload under both backends and
prints a table of per-call times and speedups.  Usage:

    python benchmarks/benchmark_backends.py [--repeat 3]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from smalldev._kernels import get_backend


def time_call(fn, *args, repeat=3, **kwargs):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args, **kwargs)
        best = min(best, time.perf_counter() - t0)
    return best


def dp_workload():
    n = 100_000
    half = 32
    jlo = np.zeros(n + 1, dtype=np.int64)
    jhi = np.full(n + 1, 2 * half, dtype=np.int64)
    comp = np.zeros(n, dtype=np.int64)
    offsets = np.array([[-1, 1]], dtype=np.int64)
    probs = np.array([[0.5, 0.5]])
    nsup = np.array([2], dtype=np.int64)
    pad = 1
    size = 2 * half + 1 + 2 * pad
    return (jlo + pad, jhi + pad, comp, offsets, probs, nsup, half + pad, size)


def cn_workload():
    rng = np.random.default_rng(0)
    u = rng.random(199) + 0.1
    drift = np.repeat(rng.normal(0.0, 31.6, size=2000), 40)  # t = 2 at default grid
    return u, drift, 0.005, 2.5e-5


def mc_workload():
    rng = np.random.default_rng(1)
    npaths, nsteps = 2048, 2000
    comp = np.zeros(nsteps, dtype=np.int64)
    kind = np.array([1], dtype=np.int64)
    cum = np.ones((1, 1))
    vals = np.zeros((1, 1))
    means = np.zeros(1)
    sds = np.ones(1)
    rand = rng.standard_normal((npaths, nsteps))
    scale = 2000.0**0.45
    lower = np.full(nsteps + 1, -scale)
    upper = np.full(nsteps + 1, scale)
    return rand, comp, kind, cum, vals, means, sds, lower, upper


def skorokhod_workload():
    rng = np.random.default_rng(2)
    n = 2000
    normals = rng.standard_normal(n * 400 * 2)
    uniforms = rng.random(n * 400 * 2)
    return normals, uniforms, 1.0, 1.0, n, 1.0 / 400, 400


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    backends = {}
    for name in ("numba", "numpy"):
        try:
            backends[name] = get_backend(name)
        except ImportError:
            print(f"backend {name} unavailable, skipping")
    if "numba" in backends:
        # trigger compilation outside the timers
        nb = backends["numba"]
        nb.dp_forward(*dp_workload())
        jlo, jhi, comp, offsets, probs, nsup, _, size = dp_workload()
        nb.dp_backward(jlo, jhi, comp, offsets, probs, nsup, size)
        u, drift, dx, ds = cn_workload()
        nb.cn_sweep(u.copy(), drift[:100], dx, ds)
        rand, comp, kind, cum, vals, means, sds, lower, upper = mc_workload()
        nb.mc_paths(np.zeros(8), np.ones(8, dtype=np.bool_), rand[:8], comp, kind, cum,
                    vals, means, sds, lower, upper)
        nb.skorokhod_run(*skorokhod_workload())

    rows = []

    def bench(label, call_for):
        times = {}
        for name, mod in backends.items():
            times[name] = call_for(mod)
        rows.append((label, times))

    bench("dp_forward (n=1e5, 65 states)", lambda mod: time_call(
        mod.dp_forward, *dp_workload(), repeat=args.repeat))

    def dp_b(mod):
        jlo, jhi, comp, offsets, probs, nsup, _, size = dp_workload()
        return time_call(mod.dp_backward, jlo, jhi, comp, offsets, probs, nsup, size,
                         repeat=args.repeat)

    bench("dp_backward (n=1e5, 65 states)", dp_b)

    def cn(mod):
        u, drift, dx, ds = cn_workload()
        return time_call(lambda: mod.cn_sweep(u.copy(), drift, dx, ds), repeat=args.repeat)

    bench("cn_sweep (80k steps, 199 nodes)", cn)

    def mc(mod):
        rand, comp, kind, cum, vals, means, sds, lower, upper = mc_workload()

        def run():
            pos = np.zeros(rand.shape[0])
            alive = np.ones(rand.shape[0], dtype=np.bool_)
            mod.mc_paths(pos, alive, rand, comp, kind, cum, vals, means, sds, lower, upper)

        return time_call(run, repeat=args.repeat)

    bench("mc_paths (2048 paths x 2000 steps)", mc)

    bench("skorokhod_run (n=2000 walk)", lambda mod: time_call(
        mod.skorokhod_run, *skorokhod_workload(), repeat=args.repeat))

    width = max(len(r[0]) for r in rows) + 2
    names = list(backends)
    header = "kernel".ljust(width) + "".join(f"{n:>12}" for n in names)
    if len(names) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for label, times in rows:
        line = label.ljust(width) + "".join(f"{times[n] * 1e3:>10.1f}ms" for n in names)
        if len(names) == 2:
            line += f"{times['numpy'] / times['numba']:>9.1f}x"
        print(line)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
