"""Embedding a two-point walk into a Brownian path by first-exit times.

The Brownian path is simulated on a fine grid; each walk step is the exit
of the path from (-u, v) relative to the previous exit point, detected
either by a direct grid crossing or by the bridge-crossing acceptance test
inside a grid step, so the exit side has the exact two-point distribution.
The walk is then compared against the Brownian value at the deterministic
clock D_k = k * E(step^2), and the tail of max_k |S_k - W_{D_k}| is
reported next to the polynomial envelopes 2 x^(-lam) n E|step|^lam for
lam in {2, 4}.  The envelopes describe a different (non-constructive)
coupling and carry an unknown absolute constant; they are printed for shape
comparison only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .environment import StepLaw
from .rng import TAG_COUPLE, stream

_FINE_STEPS_PER_EXIT = 400


@dataclass(frozen=True)
class TwoPointLaw:
    """Centered two-point step: -u with probability p, +v otherwise."""

    u: float
    p: float
    v: float

    def __post_init__(self):
        if self.u <= 0 or self.v <= 0:
            raise ValueError("u and v must be positive")
        if not 0.0 < self.p < 1.0:
            raise ValueError("p must lie in (0, 1)")
        if abs(self.p * self.u - (1.0 - self.p) * self.v) > 1e-9:
            raise ValueError("law must be centered: p*u == (1-p)*v")

    @classmethod
    def from_step_law(cls, law: StepLaw) -> "TwoPointLaw":
        if law.kind != "lattice" or len(law.offsets) != 2:
            raise ValueError("need a two-point lattice law")
        lo, hi = law.spacing * law.offsets[0], law.spacing * law.offsets[1]
        if not lo < 0 < hi:
            raise ValueError("two-point law must straddle 0")
        return cls(u=-lo, p=law.probs[0], v=hi)

    @property
    def step_variance(self) -> float:
        return self.u * self.v

    def abs_moment(self, lam: float) -> float:
        return self.p * self.u**lam + (1.0 - self.p) * self.v**lam


@dataclass(frozen=True)
class CouplingRun:
    """One embedded walk: exit times, walk values, clock times, path values."""

    n: int
    law: TwoPointLaw
    s_path: np.ndarray
    tau: np.ndarray
    clock: np.ndarray
    wd: np.ndarray

    @property
    def max_dist(self) -> float:
        return float(np.abs(self.s_path - self.wd).max())


def skorokhod_couple(law: TwoPointLaw | StepLaw, n: int, seed: int, replica: int = 0) -> CouplingRun:
    """Embed an n-step walk; deterministic given (seed, replica).

    The fine step is min(u, v)^2 / 400, shrunk so the clock spacing
    u*v is an exact multiple; exit times are recorded at the end of the
    detecting step (bias below one fine step), while exit sides and hence
    the walk marginals are exact.
    """
    if isinstance(law, StepLaw):
        law = TwoPointLaw.from_step_law(law)
    if n < 1:
        raise ValueError("n must be >= 1")
    dt0 = min(law.u, law.v) ** 2 / _FINE_STEPS_PER_EXIT
    steps_per_clock = int(math.ceil(law.u * law.v / dt0 - 1e-12))
    dt = law.u * law.v / steps_per_clock
    rng = stream(seed, TAG_COUPLE, replica)
    mean_steps = n * steps_per_clock
    margin = 8.0 * math.sqrt(n + 1.0) * steps_per_clock + 4.0 * steps_per_clock
    budget = int(mean_steps + margin)
    for _ in range(12):
        normals = rng.standard_normal(budget)
        uniforms = rng.random(budget)
        status, s_path, tau, wd, _, _ = _kernels.skorokhod_run(
            normals, uniforms, law.u, law.v, n, dt, steps_per_clock
        )
        if status == _kernels.OK:
            clock = law.step_variance * np.arange(n + 1)
            return CouplingRun(n=n, law=law, s_path=s_path, tau=tau, clock=clock, wd=wd)
        budget *= 2
    raise RuntimeError("embedding failed to finish within the draw budget")


def coupling_tail_report(
    law: TwoPointLaw | StepLaw,
    n: int,
    reps: int,
    x_grid,
    seed: int = 0,
) -> list[tuple[float, float, float, float]]:
    """Empirical tail of the coupling distance against polynomial envelopes.

    Rows are (x, empirical P(max_dist >= x), envelope at lam=2, lam=4); the
    envelopes are 2 x^(-lam) n E|step|^lam, shape comparison only.
    """
    if isinstance(law, StepLaw):
        law = TwoPointLaw.from_step_law(law)
    if reps < 1000:
        raise ValueError("reps must be >= 1000")
    dists = np.array([skorokhod_couple(law, n, seed, replica=r).max_dist for r in range(reps)])
    rows = []
    m2 = n * law.abs_moment(2.0)
    m4 = n * law.abs_moment(4.0)
    for x in x_grid:
        x = float(x)
        tail = float((dists >= x).mean())
        env2 = 2.0 * m2 / x**2 if x > 0 else math.inf
        env4 = 2.0 * m4 / x**4 if x > 0 else math.inf
        rows.append((x, tail, env2, env4))
    return rows
