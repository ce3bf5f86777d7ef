"""Monte Carlo estimation of window-survival probabilities.

Naive sampling works while the staying probability is moderate; for rare
events the multilevel splitting estimator advances a fixed population of
particles block by block, resampling the survivors at each block end so the
product of per-block survival fractions estimates the full probability.
Block ends are at multiples of T = floor(D * n**(2 alpha)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from . import _kernels
from .boundaries import BoundarySpec
from .environment import EnvironmentModel, QuenchedEnvironment
from .rng import TAG_MC, TAG_SPLIT, stream

_CHUNK = 2048


@dataclass(frozen=True)
class SplitConfig:
    """Fixed-effort splitting layout: D sets the block length, not quantiles."""

    d_blocks: int = 4
    particles: int = 1000

    def __post_init__(self):
        if self.d_blocks < 1:
            raise ValueError("D must be a positive integer")
        if self.particles < 2:
            raise ValueError("need at least 2 particles per level")

    def block_length(self, n: int, alpha: float) -> int:
        t_len = int(self.d_blocks * float(n) ** (2.0 * alpha))
        if t_len < 1:
            raise ValueError("block length T is zero; increase D or n")
        return t_len

    def level_ends(self, n: int, alpha: float) -> list[int]:
        t_len = self.block_length(n, alpha)
        k = n // t_len
        if k < 1:
            raise ValueError(f"no complete block fits: T={t_len} > n={n}; decrease D")
        ends = [t_len * (j + 1) for j in range(k)]
        if ends[-1] < n:
            ends.append(n)
        return ends


@dataclass(frozen=True)
class McEstimate:
    log_prob: float
    stderr: float
    replications: int
    method: str
    degenerate: bool = False
    extinct_level: int | None = None
    steps_simulated: int = 0
    stderr_bootstrap: float | None = None
    level_fractions: tuple = ()

    @property
    def probability(self) -> float:
        return math.exp(self.log_prob)


def _sampling_tables(model: EnvironmentModel):
    ncomp = len(model.components)
    smax = max(len(law.offsets) for law in model.components) if ncomp else 1
    smax = max(smax, 1)
    kind = np.zeros(ncomp, dtype=np.int64)
    cum = np.ones((ncomp, smax))
    vals = np.zeros((ncomp, smax))
    means = np.zeros(ncomp)
    sds = np.zeros(ncomp)
    for c, law in enumerate(model.components):
        if law.kind == "lattice":
            ns = len(law.offsets)
            cs = np.cumsum(law.probs)
            cs[-1] = 1.0
            cum[c, :ns] = cs
            cum[c, ns:] = 1.0
            vals[c, :ns] = law.spacing * np.asarray(law.offsets, dtype=float)
        else:
            kind[c] = 1
            means[c] = law.gauss_mean
            sds[c] = math.sqrt(law.gauss_var)
    return kind, cum, vals, means, sds


def _draw_block(rng, m: int, comp: np.ndarray, kind: np.ndarray) -> np.ndarray:
    """Uniform draws, with gaussian columns pushed through the normal quantile."""
    rand = rng.random((m, comp.shape[0]))
    gcols = np.nonzero(kind[comp] == 1)[0]
    if gcols.size:
        rand[:, gcols] = ndtri(rand[:, gcols])
    return rand


def mc_survival(
    envr: QuenchedEnvironment,
    boundary: BoundarySpec,
    n: int,
    x0: float,
    reps: int,
    seed: int,
    bootstrap: bool = False,
) -> McEstimate:
    """Fraction of independent trajectories staying inside every window.

    Replica chunk r draws from the stream (seed, mc, r) and chunks are
    reduced in order, so the estimate is identical however the chunks are
    scheduled.  Zero successes are reported through the degenerate flag
    (the signal to switch to splitting).
    """
    if reps < 100:
        raise ValueError("reps must be >= 100")
    kind, cum, vals, means, sds = _sampling_tables(envr.model)
    lower, upper = boundary.window_arrays(n, envr=envr, x0=x0)
    comp = envr.indices[boundary.t_shift : boundary.t_shift + n]
    if comp.shape[0] != n:
        raise ValueError("environment too short for requested n and t_shift")
    successes = 0
    steps_total = 0
    if lower[0] <= x0 <= upper[0]:
        for r, start in enumerate(range(0, reps, _CHUNK)):
            m = min(_CHUNK, reps - start)
            rng = stream(seed, TAG_MC, r)
            rand = _draw_block(rng, m, comp, kind)
            pos = np.full(m, float(x0))
            alive = np.ones(m, dtype=np.bool_)
            steps_total += int(
                _kernels.mc_paths(pos, alive, rand, comp, kind, cum, vals, means, sds, lower, upper)
            )
            successes += int(alive.sum())
    if successes == 0:
        return McEstimate(
            log_prob=-math.inf,
            stderr=math.inf,
            replications=reps,
            method="naive",
            degenerate=True,
            steps_simulated=steps_total,
        )
    p_hat = successes / reps
    se_log = math.sqrt((1.0 - p_hat) / (p_hat * reps))
    boot = None
    if bootstrap:
        brng = stream(seed, TAG_MC, 1 << 40)
        draws = brng.binomial(reps, p_hat, size=200)
        draws = np.maximum(draws, 1)
        boot = float(np.std(np.log(draws / reps), ddof=1))
    return McEstimate(
        log_prob=math.log(p_hat),
        stderr=se_log,
        replications=reps,
        method="naive",
        steps_simulated=steps_total,
        stderr_bootstrap=boot,
    )


def split_survival(
    envr: QuenchedEnvironment,
    boundary: BoundarySpec,
    n: int,
    x0: float,
    config: SplitConfig,
    seed: int,
    bootstrap: bool = False,
) -> McEstimate:
    """Fixed-effort multilevel splitting across the block decomposition.

    All particles advance one block; survivors are resampled uniformly with
    replacement back to full strength; the log estimate is the sum of
    per-level log survival fractions.  Standard error accumulates the
    binomial delta-method term (1 - f) / (N f) per level, treating levels
    as independent.
    """
    ends = config.level_ends(n, boundary.alpha)
    n_part = config.particles
    kind, cum, vals, means, sds = _sampling_tables(envr.model)
    lower, upper = boundary.window_arrays(n, envr=envr, x0=x0)
    comp = envr.indices[boundary.t_shift : boundary.t_shift + n]
    if comp.shape[0] != n:
        raise ValueError("environment too short for requested n and t_shift")
    if not lower[0] <= x0 <= upper[0]:
        return McEstimate(
            log_prob=-math.inf,
            stderr=math.inf,
            replications=n_part,
            method="split",
            degenerate=True,
        )
    pos = np.full(n_part, float(x0))
    log_prob = 0.0
    var_log = 0.0
    steps_total = 0
    fractions = []
    start_idx = 0
    for level, end in enumerate(ends):
        rng = stream(seed, TAG_SPLIT, level)
        rand = _draw_block(rng, n_part, comp[start_idx:end], kind)
        alive = np.ones(n_part, dtype=np.bool_)
        steps_total += int(
            _kernels.mc_paths(
                pos,
                alive,
                rand,
                comp[start_idx:end],
                kind,
                cum,
                vals,
                means,
                sds,
                lower[start_idx : end + 1],
                upper[start_idx : end + 1],
            )
        )
        n_surv = int(alive.sum())
        if n_surv == 0:
            return McEstimate(
                log_prob=-math.inf,
                stderr=math.inf,
                replications=n_part,
                method="split",
                degenerate=True,
                extinct_level=level,
                steps_simulated=steps_total,
                level_fractions=tuple(fractions),
            )
        frac = n_surv / n_part
        fractions.append(frac)
        log_prob += math.log(frac)
        var_log += (1.0 - frac) / (n_part * frac)
        survivors = pos[alive]
        pick = rng.integers(0, n_surv, n_part)
        pos = survivors[pick]
        start_idx = end
    boot = None
    if bootstrap:
        brng = stream(seed, TAG_SPLIT, 1 << 40)
        sims = np.zeros(200)
        for frac in fractions:
            draws = np.maximum(brng.binomial(n_part, frac, size=200), 1)
            sims += np.log(draws / n_part)
        boot = float(np.std(sims, ddof=1))
    return McEstimate(
        log_prob=log_prob,
        stderr=math.sqrt(var_log),
        replications=n_part,
        method="split",
        steps_simulated=steps_total,
        stderr_bootstrap=boot,
        level_fractions=tuple(fractions),
    )
