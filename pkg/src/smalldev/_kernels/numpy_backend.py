"""Vectorized numpy/scipy implementations of the hot kernels.

This is the fallback backend: same contracts and same random-number
consumption order as the numba backend, so the two produce matching results
on identical inputs (up to floating-point associativity).
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import solve_banded

OK = 0
DEAD = 1
NEGATIVE = 2
EXHAUSTED = 3

_NEG_TOL = 1e-3


def dp_forward(jlo, jhi, comp, offsets, probs, nsup, u0, size):
    """Forward absorbed-walk sweep in log space.

    State vector lives on a padded integer lattice; at step i the mass
    outside [jlo[i+1], jhi[i+1]] is absorbed and the remainder renormalized,
    accumulating log mass.  Returns (status, log_prob, final distribution).
    """
    n = comp.shape[0]
    v = np.zeros(size)
    if jlo[0] > jhi[0] or not jlo[0] <= u0 <= jhi[0]:
        return DEAD, -math.inf, v
    v[u0] = 1.0
    log_acc = 0.0
    for i in range(n):
        lo = jlo[i + 1]
        hi = jhi[i + 1]
        if lo > hi:
            return DEAD, -math.inf, np.zeros(size)
        c = comp[i]
        w = np.zeros(hi - lo + 1)
        for s in range(nsup[c]):
            off = offsets[c, s]
            w += probs[c, s] * v[lo - off : hi + 1 - off]
        total = w.sum()
        if total <= 0.0:
            return DEAD, -math.inf, np.zeros(size)
        w /= total
        log_acc += math.log(total)
        v = np.zeros(size)
        v[lo : hi + 1] = w
    return OK, log_acc, v


def dp_backward(jlo, jhi, comp, offsets, probs, nsup, size):
    """Backward sweep: survival profile over all start states at once.

    Returns (status, log_acc, v0) with log P(survive | start u) equal to
    log_acc + log(v0[u]); v0 is scaled so its maximum is 1.
    """
    n = comp.shape[0]
    for i in range(n + 1):
        if jlo[i] > jhi[i]:
            return DEAD, -math.inf, np.zeros(size)
    v = np.zeros(size)
    v[jlo[n] : jhi[n] + 1] = 1.0
    log_acc = 0.0
    for i in range(n - 1, -1, -1):
        lo = jlo[i]
        hi = jhi[i]
        c = comp[i]
        w = np.zeros(hi - lo + 1)
        for s in range(nsup[c]):
            off = offsets[c, s]
            w += probs[c, s] * v[lo + off : hi + 1 + off]
        mx = w.max()
        if mx <= 0.0:
            return DEAD, -math.inf, np.zeros(size)
        w /= mx
        log_acc += math.log(mx)
        v = np.zeros(size)
        v[lo : hi + 1] = w
    return OK, log_acc, v


def cn_sweep(u, drift, dx, ds, rannacher=1, renorm_every=64):
    """Crank-Nicolson sweep of the drifted heat equation with absorbing walls.

    u holds interior node values and is advanced in place by len(drift)
    steps; drift[m] is the advection coefficient during step m.  The first
    `rannacher` steps are split into two implicit-Euler half steps to damp
    the oscillatory response to non-smooth data.  Values are renormalized by
    their maximum every renorm_every steps with the log scale accumulated;
    returns (status, accumulated log scale).
    """
    m = u.shape[0]
    nsteps = drift.shape[0]
    a = ds / (4.0 * dx * dx)
    log_acc = 0.0
    ab = np.empty((3, m))
    last_c = np.nan
    for step in range(nsteps):
        c = drift[step]
        if c != last_c:
            b = c * ds / (4.0 * dx)
            ab[0, 1:] = -(a + b)
            ab[1, :] = 1.0 + 2.0 * a
            ab[2, :-1] = -(a - b)
            last_c = c
        if step < rannacher:
            # two backward-Euler half steps share the CN left-hand matrix
            u[:] = solve_banded((1, 1), ab, u, check_finite=False)
            u[:] = solve_banded((1, 1), ab, u, check_finite=False)
        else:
            b = c * ds / (4.0 * dx)
            rhs = (1.0 - 2.0 * a) * u
            rhs[:-1] += (a + b) * u[1:]
            rhs[1:] += (a - b) * u[:-1]
            u[:] = solve_banded((1, 1), ab, rhs, check_finite=False)
        if step % renorm_every == 0 or step == nsteps - 1:
            mx = u.max()
            if mx <= 0.0:
                return DEAD, -math.inf
            if u.min() < -_NEG_TOL * mx:
                return NEGATIVE, log_acc
            np.clip(u, 0.0, None, out=u)
            u /= mx
            log_acc += math.log(mx)
    return OK, log_acc


def mc_paths(pos, alive, rand, comp, kind, cum, vals, means, sds, lower, upper):
    """Advance a block of walk trajectories through per-step windows.

    pos/alive are updated in place; rand columns hold U(0,1) draws for
    lattice steps and N(0,1) draws for gaussian steps.  Returns the number
    of path-steps actually simulated (dead paths stop consuming).
    """
    nsteps = rand.shape[1]
    steps_used = 0
    for j in range(nsteps):
        n_alive = int(alive.sum())
        if n_alive == 0:
            break
        steps_used += n_alive
        c = comp[j]
        col = rand[:, j]
        if kind[c] == 0:
            k = np.searchsorted(cum[c], col, side="right")
            step_vals = vals[c][k]
        else:
            step_vals = means[c] + sds[c] * col
        pos[alive] += step_vals[alive]
        inside = (pos >= lower[j + 1]) & (pos <= upper[j + 1])
        alive &= inside
    return steps_used


def skorokhod_run(normals, uniforms, u, v, n, dt, steps_per_clock):
    """Embed an n-step two-point walk in a fine-grid Brownian path.

    Consumes one normal per fine step and one uniform per surviving
    (non-crossing) step of an active excursion, exactly matching the
    sequential backend.  Returns (status, S, tau, wd, normals used,
    uniforms used); wd[k] is the Brownian value at the deterministic clock
    time k * u * v.
    """
    scale = math.sqrt(dt)
    steps = np.empty(n)
    tau = np.zeros(n + 1)
    wd = np.zeros(n + 1)
    empty = np.zeros(n + 1)
    pn = 0
    pu = 0
    m_abs = 0
    w_ref = 0.0
    x_rel = 0.0
    k = 0
    d_next = 1
    total_n = normals.shape[0]
    block = 1024
    while k < n:
        if pn >= total_n:
            return EXHAUSTED, empty, tau, wd, pn, pu
        y = x_rel + scale * np.cumsum(normals[pn : pn + block])
        nb = y.shape[0]
        direct_up = y >= v
        direct_dn = y <= -u
        direct = direct_up | direct_dn
        xs = np.empty(nb)
        xs[0] = x_rel
        xs[1:] = y[:-1]
        nondirect = ~direct
        cnd = np.cumsum(nondirect)
        if cnd[-1] > uniforms.shape[0] - pu:
            return EXHAUSTED, empty, tau, wd, pn, pu
        p_up = np.zeros(nb)
        p_dn = np.zeros(nb)
        np.exp(-2.0 * (v - xs) * (v - y) / dt, where=nondirect, out=p_up)
        np.exp(-2.0 * (xs + u) * (y + u) / dt, where=nondirect, out=p_dn)
        uu = np.ones(nb)
        uu[nondirect] = uniforms[pu : pu + cnd[-1]]
        bridge = nondirect & (uu < p_up + p_dn)
        fire = direct | bridge
        hits = np.nonzero(fire)[0]
        if hits.size == 0:
            e = nb - 1
            exited = False
            side = 0.0
        else:
            e = int(hits[0])
            exited = True
            if direct_up[e] or (bridge[e] and uu[e] < p_up[e]):
                side = v
            else:
                side = -u
        # clock records inside the surviving prefix; at the exit step the
        # path value is snapped to the boundary before recording
        lo_m = m_abs + 1
        hi_m = m_abs + e + 1
        d_lo = -(-lo_m // steps_per_clock)  # ceil division
        for d in range(max(d_lo, d_next), min(hi_m // steps_per_clock, n) + 1):
            i = d * steps_per_clock - m_abs - 1
            if exited and i == e:
                wd[d] = w_ref + side
            else:
                wd[d] = w_ref + y[i]
            d_next = d + 1
        pn += e + 1
        pu += int(cnd[e])
        m_abs += e + 1
        if exited:
            steps[k] = side
            k += 1
            tau[k] = m_abs * dt
            w_ref = w_ref + side
            x_rel = 0.0
        else:
            x_rel = y[-1]
    # walk finished; keep advancing the Brownian path to fill the clock grid
    while d_next <= n:
        if pn >= total_n:
            return EXHAUSTED, empty, tau, wd, pn, pu
        need = n * steps_per_clock - m_abs
        take = min(need, total_n - pn)
        y = x_rel + scale * np.cumsum(normals[pn : pn + take])
        m_vals = m_abs + 1 + np.arange(take)
        on_grid = m_vals % steps_per_clock == 0
        ds_idx = m_vals[on_grid] // steps_per_clock
        keep = ds_idx <= n
        wd[ds_idx[keep]] = w_ref + y[on_grid][keep]
        if ds_idx[keep].size:
            d_next = int(ds_idx[keep][-1]) + 1
        pn += take
        m_abs += take
        x_rel = float(y[-1])
    s_path = np.zeros(n + 1)
    np.cumsum(steps, out=s_path[1:])
    return OK, s_path, tau, wd, pn, pu
