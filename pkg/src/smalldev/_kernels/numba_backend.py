"""Numba implementations of the hot kernels.

Same contracts as numpy_backend; see that module for the documented
semantics.  Loops are written per element so early exits (absorbed paths,
dead windows) cost nothing.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

OK = 0
DEAD = 1
NEGATIVE = 2
EXHAUSTED = 3

_NEG_TOL = 1e-3


@njit(cache=True)
def dp_forward(jlo, jhi, comp, offsets, probs, nsup, u0, size):
    n = comp.shape[0]
    v = np.zeros(size)
    if jlo[0] > jhi[0] or u0 < jlo[0] or u0 > jhi[0]:
        return DEAD, -np.inf, v
    v[u0] = 1.0
    w = np.zeros(size)
    log_acc = 0.0
    prev_lo = u0
    prev_hi = u0
    for i in range(n):
        lo = jlo[i + 1]
        hi = jhi[i + 1]
        if lo > hi:
            return DEAD, -np.inf, np.zeros(size)
        c = comp[i]
        ns = nsup[c]
        total = 0.0
        for uu in range(lo, hi + 1):
            acc = 0.0
            for s in range(ns):
                acc += probs[c, s] * v[uu - offsets[c, s]]
            w[uu] = acc
            total += acc
        if total <= 0.0:
            return DEAD, -np.inf, np.zeros(size)
        log_acc += math.log(total)
        for uu in range(prev_lo, prev_hi + 1):
            v[uu] = 0.0
        for uu in range(lo, hi + 1):
            v[uu] = w[uu] / total
            w[uu] = 0.0
        prev_lo = lo
        prev_hi = hi
    return OK, log_acc, v


@njit(cache=True)
def dp_backward(jlo, jhi, comp, offsets, probs, nsup, size):
    n = comp.shape[0]
    for i in range(n + 1):
        if jlo[i] > jhi[i]:
            return DEAD, -np.inf, np.zeros(size)
    v = np.zeros(size)
    for uu in range(jlo[n], jhi[n] + 1):
        v[uu] = 1.0
    w = np.zeros(size)
    log_acc = 0.0
    prev_lo = jlo[n]
    prev_hi = jhi[n]
    for i in range(n - 1, -1, -1):
        lo = jlo[i]
        hi = jhi[i]
        c = comp[i]
        ns = nsup[c]
        mx = 0.0
        for uu in range(lo, hi + 1):
            acc = 0.0
            for s in range(ns):
                acc += probs[c, s] * v[uu + offsets[c, s]]
            w[uu] = acc
            if acc > mx:
                mx = acc
        if mx <= 0.0:
            return DEAD, -np.inf, np.zeros(size)
        log_acc += math.log(mx)
        for uu in range(prev_lo, prev_hi + 1):
            v[uu] = 0.0
        for uu in range(lo, hi + 1):
            v[uu] = w[uu] / mx
            w[uu] = 0.0
        prev_lo = lo
        prev_hi = hi
    return OK, log_acc, v


@njit(cache=True)
def _thomas(lower, diag, upper, rhs, cp, dp, out):
    m = rhs.shape[0]
    cp[0] = upper / diag
    dp[0] = rhs[0] / diag
    for j in range(1, m):
        denom = diag - lower * cp[j - 1]
        cp[j] = upper / denom
        dp[j] = (rhs[j] - lower * dp[j - 1]) / denom
    out[m - 1] = dp[m - 1]
    for j in range(m - 2, -1, -1):
        out[j] = dp[j] - cp[j] * out[j + 1]


@njit(cache=True)
def cn_sweep(u, drift, dx, ds, rannacher=1, renorm_every=64):
    m = u.shape[0]
    nsteps = drift.shape[0]
    a = ds / (4.0 * dx * dx)
    log_acc = 0.0
    cp = np.empty(m)
    dp_ = np.empty(m)
    rhs = np.empty(m)
    for step in range(nsteps):
        c = drift[step]
        b = c * ds / (4.0 * dx)
        lower = -(a - b)
        diag = 1.0 + 2.0 * a
        upper = -(a + b)
        if step < rannacher:
            _thomas(lower, diag, upper, u, cp, dp_, rhs)
            _thomas(lower, diag, upper, rhs, cp, dp_, u)
        else:
            for j in range(m):
                val = (1.0 - 2.0 * a) * u[j]
                if j + 1 < m:
                    val += (a + b) * u[j + 1]
                if j > 0:
                    val += (a - b) * u[j - 1]
                rhs[j] = val
            _thomas(lower, diag, upper, rhs, cp, dp_, u)
        if step % renorm_every == 0 or step == nsteps - 1:
            mx = 0.0
            mn = 0.0
            for j in range(m):
                if u[j] > mx:
                    mx = u[j]
                if u[j] < mn:
                    mn = u[j]
            if mx <= 0.0:
                return DEAD, -np.inf
            if mn < -_NEG_TOL * mx:
                return NEGATIVE, log_acc
            for j in range(m):
                if u[j] < 0.0:
                    u[j] = 0.0
                u[j] /= mx
            log_acc += math.log(mx)
    return OK, log_acc


@njit(cache=True)
def mc_paths(pos, alive, rand, comp, kind, cum, vals, means, sds, lower, upper):
    npaths = pos.shape[0]
    nsteps = rand.shape[1]
    steps_used = 0
    for r in range(npaths):
        if not alive[r]:
            continue
        x = pos[r]
        for j in range(nsteps):
            steps_used += 1
            c = comp[j]
            draw = rand[r, j]
            if kind[c] == 0:
                s = 0
                while draw >= cum[c, s]:
                    s += 1
                x += vals[c, s]
            else:
                x += means[c] + sds[c] * draw
            if x < lower[j + 1] or x > upper[j + 1]:
                alive[r] = False
                break
        pos[r] = x
    return steps_used


@njit(cache=True)
def skorokhod_run(normals, uniforms, u, v, n, dt, steps_per_clock):
    scale = math.sqrt(dt)
    s_path = np.zeros(n + 1)
    tau = np.zeros(n + 1)
    wd = np.zeros(n + 1)
    pn = 0
    pu = 0
    m_abs = 0
    w_ref = 0.0
    x_rel = 0.0
    k = 0
    d_next = 1
    total_n = normals.shape[0]
    total_u = uniforms.shape[0]
    while k < n or d_next <= n:
        if pn >= total_n:
            return EXHAUSTED, s_path, tau, wd, pn, pu
        y = x_rel + scale * normals[pn]
        pn += 1
        m_abs += 1
        if k < n:
            exited = False
            side = 0.0
            if y >= v:
                exited = True
                side = v
            elif y <= -u:
                exited = True
                side = -u
            else:
                if pu >= total_u:
                    return EXHAUSTED, s_path, tau, wd, pn, pu
                p_up = math.exp(-2.0 * (v - x_rel) * (v - y) / dt)
                p_dn = math.exp(-2.0 * (x_rel + u) * (y + u) / dt)
                draw = uniforms[pu]
                pu += 1
                if draw < p_up:
                    exited = True
                    side = v
                elif draw < p_up + p_dn:
                    exited = True
                    side = -u
            if exited:
                s_path[k + 1] = s_path[k] + side
                k += 1
                tau[k] = m_abs * dt
                w_ref = w_ref + side
                x_rel = 0.0
            else:
                x_rel = y
        else:
            x_rel = y
        if m_abs % steps_per_clock == 0:
            d = m_abs // steps_per_clock
            if d <= n and d >= d_next:
                wd[d] = w_ref + x_rel
                d_next = d + 1
    return OK, s_path, tau, wd, pn, pu
