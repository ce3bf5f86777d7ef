"""Exact survival probabilities for lattice walks by absorbing dynamic programming.

All step laws must live on a common lattice x0 + spacing * Z.  The forward
sweep propagates the conditional occupation law step by step, absorbing
mass outside the window and accumulating the log of the surviving fraction,
so probabilities far below floating-point range stay exact in log space.
The backward sweep produces the survival probability of every start state
at once, which the sup / inf-over-starts exponent variants read directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _kernels
from .boundaries import BoundarySpec, lattice_index_bounds, scalar_index_bounds
from .environment import EnvironmentModel, QuenchedEnvironment, StepLaw


class SpacingMismatch(ValueError):
    """Step laws do not share a single lattice."""


class TooLarge(ValueError):
    """Instance exceeds the exact-enumeration limits."""


@dataclass(frozen=True)
class SurvivalResult:
    """Log survival probability and its small-deviation normalization."""

    log_prob: float
    n: int
    alpha: float
    variant: str
    start: float | None = None
    empty_window: bool = False

    @property
    def exponent(self) -> float:
        """log_prob / n**(1 - 2 alpha); -inf when the probability is zero."""
        if self.n == 0:
            return 0.0 if self.log_prob == 0.0 else -math.inf
        return self.log_prob / float(self.n) ** (1.0 - 2.0 * self.alpha)

    @property
    def zero_probability(self) -> bool:
        return self.log_prob == -math.inf

    @property
    def probability(self) -> float:
        return math.exp(self.log_prob)


def _lattice_tables(model: EnvironmentModel):
    """Common spacing plus padded per-component (offsets, probs) tables."""
    spacing = None
    for law in model.components:
        if law.kind != "lattice":
            raise SpacingMismatch("exact DP needs lattice step laws; got a gaussian component")
        if spacing is None:
            spacing = law.spacing
        elif not math.isclose(law.spacing, spacing, rel_tol=1e-12):
            raise SpacingMismatch(f"component spacings differ: {law.spacing} vs {spacing}")
    ncomp = len(model.components)
    smax = max(len(law.offsets) for law in model.components)
    offsets = np.zeros((ncomp, smax), dtype=np.int64)
    probs = np.zeros((ncomp, smax))
    nsup = np.zeros(ncomp, dtype=np.int64)
    for c, law in enumerate(model.components):
        nsup[c] = len(law.offsets)
        offsets[c, : nsup[c]] = law.offsets
        probs[c, : nsup[c]] = law.probs
    pad = int(np.abs(offsets).max()) if offsets.size else 0
    return spacing, offsets, probs, nsup, max(pad, 1)


def _window_indices(boundary, envr, n, origin, spacing, x0=0.0):
    lower, upper = boundary.window_arrays(n, envr=envr, x0=x0)
    jlo, jhi = lattice_index_bounds(lower, upper, origin, spacing)
    return lower, upper, jlo, jhi


def _padded(jlo, jhi, pad):
    jmin = int(jlo.min())
    jmax = int(jhi.max())
    size = jmax - jmin + 1 + 2 * pad
    shift = pad - jmin
    return (jlo + shift).astype(np.int64), (jhi + shift).astype(np.int64), shift, size


def _env_components(envr: QuenchedEnvironment, boundary: BoundarySpec, n: int) -> np.ndarray:
    t0 = boundary.t_shift
    if t0 + n > len(envr):
        raise ValueError(f"environment of length {len(envr)} too short for t_shift={t0}, n={n}")
    return envr.indices[t0 : t0 + n]


def _flagged(n, alpha, variant, start=None, empty=False) -> SurvivalResult:
    return SurvivalResult(
        log_prob=-math.inf, n=n, alpha=alpha, variant=variant, start=start, empty_window=empty
    )


def exact_survival(
    envr: QuenchedEnvironment, boundary: BoundarySpec, n: int, x0: float = 0.0
) -> SurvivalResult:
    """Probability the walk started at x0 stays inside every window for n steps.

    Forward DP with per-step renormalization; an empty window at any step is
    reported through the flag rather than an exception.
    """
    spacing, offsets, probs, nsup, pad = _lattice_tables(envr.model)
    comp = _env_components(envr, boundary, n)
    _, _, jlo, jhi = _window_indices(boundary, envr, n, x0, spacing, x0=x0)
    if np.any(jlo > jhi):
        return _flagged(n, boundary.alpha, "point_start", start=x0, empty=True)
    jlo_u, jhi_u, shift, size = _padded(jlo, jhi, pad)
    status, log_prob, _ = _kernels.dp_forward(jlo_u, jhi_u, comp, offsets, probs, nsup, shift, size)
    if status != _kernels.OK:
        return _flagged(n, boundary.alpha, "point_start", start=x0)
    return SurvivalResult(
        log_prob=min(log_prob, 0.0), n=n, alpha=boundary.alpha, variant="point_start", start=x0
    )


def exact_exponent(
    envr: QuenchedEnvironment,
    boundary: BoundarySpec,
    n: int,
    variant: str = "sup",
    x0: float = 0.0,
) -> SurvivalResult:
    """Survival exponent optimized over start states.

    variant "sup": best start on the lattice points of the step-0 window
    (starts off the window carry probability zero).  variant "inf_exit":
    worst start on the entry window, with the end state confined to the exit
    window.  variant "point": fixed start x0 (on the lattice).
    """
    if variant not in ("sup", "inf_exit", "point"):
        raise ValueError(f"unknown variant {variant!r}")
    label = {"sup": "sup_start", "inf_exit": "inf_entry_with_exit", "point": "point_start"}[variant]
    spacing, offsets, probs, nsup, pad = _lattice_tables(envr.model)
    comp = _env_components(envr, boundary, n)
    _, _, jlo, jhi = _window_indices(boundary, envr, n, 0.0, spacing)
    if variant == "inf_exit":
        ap, bp = boundary.scaled_exit(n)
        xlo, xhi = scalar_index_bounds(ap, bp, 0.0, spacing)
        jlo[n] = max(jlo[n], xlo)
        jhi[n] = min(jhi[n], xhi)
    if np.any(jlo > jhi):
        return _flagged(n, boundary.alpha, label, empty=True)
    jlo_u, jhi_u, shift, size = _padded(jlo, jhi, pad)
    status, log_acc, v0 = _kernels.dp_backward(jlo_u, jhi_u, comp, offsets, probs, nsup, size)
    if status != _kernels.OK:
        return _flagged(n, boundary.alpha, label)
    if variant == "sup":
        best = v0[jlo_u[0] : jhi_u[0] + 1].max()
        log_prob = log_acc + math.log(best)
        start = None
    elif variant == "point":
        j0 = round(x0 / spacing)
        if not math.isclose(j0 * spacing, x0, rel_tol=0.0, abs_tol=1e-9 * spacing):
            raise ValueError(f"start {x0} is not on the lattice of spacing {spacing}")
        u0 = j0 + shift
        val = v0[u0] if jlo_u[0] <= u0 <= jhi_u[0] else 0.0
        log_prob = log_acc + math.log(val) if val > 0.0 else -math.inf
        start = x0
    else:
        a0, b0 = boundary.scaled_entry(n)
        elo, ehi = scalar_index_bounds(a0, b0, 0.0, spacing)
        if elo > ehi:
            return _flagged(n, boundary.alpha, label, empty=True)
        worst = v0[elo + shift : ehi + shift + 1].min()
        log_prob = log_acc + math.log(worst) if worst > 0.0 else -math.inf
        start = None
    if log_prob == -math.inf:
        return _flagged(n, boundary.alpha, label, start=start)
    return SurvivalResult(
        log_prob=min(log_prob, 0.0), n=n, alpha=boundary.alpha, variant=label, start=start
    )


def two_walk_exponent(
    v_path: np.ndarray,
    hatv_law: StepLaw,
    boundary: BoundarySpec,
    n: int,
    variant: str = "sup",
    x0: float = 0.0,
) -> SurvivalResult:
    """Exponent for one walk confined to a window carried by another path.

    v_path plays the environment role: at step i the window is
    [a n**alpha + v_i, b n**alpha + v_i], and the exit window shifts by v_n.
    """
    v_path = np.asarray(v_path, dtype=float)
    if v_path.shape != (n + 1,):
        raise ValueError(f"v_path must have length n+1={n + 1}")
    if boundary.mode != "constant":
        raise ValueError("two-walk windows are built from a constant base boundary")
    scale = float(n) ** boundary.alpha
    lower = boundary.a * scale + v_path
    upper = boundary.b * scale + v_path
    exit_pair = None
    if variant == "inf_exit":
        ap, bp = boundary.default_exit()
        exit_pair = (ap * scale + v_path[n], bp * scale + v_path[n])
    shifted = BoundarySpec.explicit(
        boundary.alpha,
        lower,
        upper,
        entry=boundary.scaled_entry(n),
        exit=exit_pair,
    )
    model = EnvironmentModel.of((hatv_law, 1.0))
    envr = QuenchedEnvironment(model=model, indices=np.zeros(n, dtype=np.int64))
    return exact_exponent(envr, shifted, n, variant=variant, x0=x0)


def enumerate_small(
    envr: QuenchedEnvironment, boundary: BoundarySpec, n: int, x0: float = 0.0
) -> Fraction:
    """Exact survival probability by exhaustive path summation in rationals.

    Test oracle: step probabilities become exact fractions and the sum over
    all surviving paths is carried out without any floating-point arithmetic
    (window membership uses the same float comparisons as the DP so both
    sides resolve boundary states identically).
    """
    if n > 14:
        raise TooLarge(f"n={n} exceeds the enumeration limit 14")
    spacing, _, _, _, _ = _lattice_tables(envr.model)
    if any(len(law.offsets) > 4 for law in envr.model.components):
        raise TooLarge("enumeration supports at most 4 support points per law")
    comp = _env_components(envr, boundary, n)
    _, _, jlo, jhi = _window_indices(boundary, envr, n, x0, spacing, x0=x0)
    if not jlo[0] <= 0 <= jhi[0]:
        return Fraction(0)
    mass: dict[int, Fraction] = {0: Fraction(1)}
    for i in range(n):
        law = envr.model.components[comp[i]]
        nxt: dict[int, Fraction] = {}
        for j, p in mass.items():
            for off, q in zip(law.offsets, law.probs):
                j2 = j + off
                if jlo[i + 1] <= j2 <= jhi[i + 1]:
                    nxt[j2] = nxt.get(j2, Fraction(0)) + p * Fraction(q)
        if not nxt:
            return Fraction(0)
        mass = nxt
    return sum(mass.values(), Fraction(0))
