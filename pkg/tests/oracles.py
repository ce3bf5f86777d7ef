"""Independent oracles the tests check the implementations against.

Everything here deliberately avoids the library's own DP/PDE kernels:
literal path enumeration, eigendecomposition of the absorbed transition
matrix, and Euler-Maruyama path simulation with bridge-crossing
corrections.  Slow oracles are run once and their outputs frozen into the
tests; the slow markers re-derive them.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def enumerate_paths(envr, lower, upper, n, x0=0.0):
    """Literal sum over all step combinations (float probabilities).

    Exponential in n; use only for n <= 10 or so.  Window membership uses
    the same closed-interval float comparisons as the production DP.
    """
    model = envr.model
    comp = envr.indices[:n]
    spacing = model.components[0].spacing
    supports = []
    for i in range(n):
        law = model.components[comp[i]]
        supports.append(list(zip(law.offsets, law.probs)))
    if not lower[0] <= x0 <= upper[0]:
        return 0.0
    total = 0.0
    for combo in itertools.product(*supports):
        pos = 0
        prob = 1.0
        ok = True
        for i, (off, p) in enumerate(combo):
            pos += off
            prob *= p
            x = x0 + pos * spacing
            if not lower[i + 1] <= x <= upper[i + 1]:
                ok = False
                break
        if ok:
            total += prob
    return total


def absorbed_eigen_log_survival(m: int, n: int, start: int = 0) -> float:
    """log P(+/-1 walk stays in {-m..m} for n steps) by eigendecomposition."""
    size = 2 * m + 1
    mat = np.zeros((size, size))
    for i in range(size):
        if i + 1 < size:
            mat[i + 1, i] = 0.5
        if i - 1 >= 0:
            mat[i - 1, i] = 0.5
    lam, vecs = np.linalg.eig(mat)
    inv = np.linalg.inv(vecs)
    v = np.zeros(size)
    v[start + m] = 1.0
    prob = (vecs @ np.diag(lam**n) @ inv @ v).sum().real
    return math.log(prob)


def pm1_eigen_rate(half_width: int) -> float:
    """Per-step log survival rate of the +/-1 walk in [-L, L]."""
    return math.log(math.cos(math.pi / (2 * half_width + 2)))


def em_tube_survival(
    w_values: np.ndarray,
    w_ds: float,
    beta: float,
    a: float,
    b: float,
    x0: float,
    t: float,
    n_paths: int,
    dt: float,
    seed: int,
) -> tuple[float, float]:
    """Euler-Maruyama estimate of P(B_s in [a + beta W_s, b + beta W_s], s <= t).

    The boundary is linear inside each W increment, so the per-step
    Brownian-bridge crossing probability against the moving line
    exp(-2 (l0 - x0)(l1 - x1) / dt) is exact up to double crossings.
    Returns (estimate, standard error).
    """
    rng = np.random.Generator(np.random.Philox(key=np.array([seed, 0], dtype=np.uint64)))
    steps = int(round(t / dt))
    dt = t / steps
    grid = np.linspace(0.0, t, steps + 1)
    w_grid = np.interp(grid, np.arange(len(w_values)) * w_ds, w_values)
    low = a + beta * w_grid
    high = b + beta * w_grid
    survivors = 0
    chunk = 200_000
    remaining = n_paths
    scale = math.sqrt(dt)
    while remaining > 0:
        m = min(chunk, remaining)
        remaining -= m
        x = np.full(m, float(x0))
        alive = np.ones(m, dtype=bool)
        for i in range(steps):
            idx = np.nonzero(alive)[0]
            if idx.size == 0:
                break
            x_old = x[idx]
            x_new = x_old + scale * rng.standard_normal(idx.size)
            inside = (x_new > low[i + 1]) & (x_new < high[i + 1])
            p_up = np.exp(-2.0 * np.clip(high[i] - x_old, 0, None)
                          * np.clip(high[i + 1] - x_new, 0, None) / dt)
            p_dn = np.exp(-2.0 * np.clip(x_old - low[i], 0, None)
                          * np.clip(x_new - low[i + 1], 0, None) / dt)
            u = rng.random(idx.size)
            safe = inside & (u > p_up + p_dn)
            x[idx] = x_new
            alive[idx] = safe
        survivors += int(alive.sum())
    p_hat = survivors / n_paths
    se = math.sqrt(max(p_hat * (1.0 - p_hat), 1e-300) / n_paths)
    return p_hat, se


def simpson_reference(fvals: np.ndarray) -> float:
    """Composite Simpson on [0,1] for an odd number of samples."""
    n = len(fvals) - 1
    h = 1.0 / n
    return h / 3.0 * (fvals[0] + fvals[-1] + 4 * fvals[1:-1:2].sum() + 2 * fvals[2:-1:2].sum())


def gaussian_abs_moment_quadrature(sigma: float, lam: float) -> float:
    """E|Z|^lam for Z ~ N(0, sigma^2) by adaptive quadrature."""
    from scipy.integrate import quad

    val, _ = quad(
        lambda z: 2.0 * abs(z) ** lam * math.exp(-z * z / (2 * sigma * sigma))
        / math.sqrt(2 * math.pi * sigma * sigma),
        0.0,
        12.0 * sigma,
        epsabs=1e-12,
        epsrel=1e-10,
        limit=200,
    )
    return val
