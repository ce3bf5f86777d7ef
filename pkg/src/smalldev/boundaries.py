"""Window geometry for the staying event.

A boundary spec describes, for a walk of length n, the closed interval
[lower_i, upper_i] the walk must occupy at every step i = 0..n.  Constant
windows scale a fixed interval by n**alpha; functional windows sample a pair
of boundary functions on i/n; recentered windows follow the realized
quenched-mean path; explicit windows are taken verbatim.  Entry and exit
windows (used by the inf-over-starts variant) are nested scaled intervals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


class EmptyWindow(Exception):
    """Some step's window contains no lattice point (flag, not raised by the DP)."""


class CrossingBoundaries(ValueError):
    """Lower boundary meets or exceeds the upper one."""


DEFAULT_ENTRY_FRACTION = 0.3
DEFAULT_EXIT_FRACTION = 0.1


@dataclass(frozen=True)
class BoundarySpec:
    """Geometry of the small-deviation window.

    mode is one of "constant", "functional", "recentered", "explicit".
    entry = (a0, b0) and exit = (ap, bp) are in pre-scaling units for the
    constant/functional/recentered modes and absolute for explicit mode.
    t_shift is the start-time offset into the environment.
    """

    alpha: float
    mode: str
    a: float = 0.0
    b: float = 0.0
    g: Callable[[float], float] | None = None
    h: Callable[[float], float] | None = None
    c: float = 0.0
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    entry: tuple[float, float] | None = None
    exit: tuple[float, float] | None = None
    t_shift: int = 0

    def __post_init__(self):
        if not 0.0 < self.alpha < 0.5:
            raise ValueError("alpha must lie in (0, 1/2)")
        if self.t_shift < 0:
            raise ValueError("t_shift must be >= 0")
        if self.mode == "constant":
            if not self.a < 0.0 < self.b:
                raise ValueError("constant window needs a < 0 < b")
            if self.entry is not None:
                a0, b0 = self.entry
                if not (self.a < a0 <= b0 < self.b):
                    raise ValueError("entry window must nest strictly inside (a, b)")
            if self.exit is not None:
                ap, bp = self.exit
                if not (self.a <= ap < bp <= self.b):
                    raise ValueError("exit window must nest inside [a, b]")
        elif self.mode == "recentered":
            if self.c <= 0.0:
                raise ValueError("recentered mode needs c > 0")
        elif self.mode == "functional":
            if self.g is None or self.h is None:
                raise ValueError("functional mode needs g and h")
        elif self.mode == "explicit":
            if self.lower is None or self.upper is None:
                raise ValueError("explicit mode needs lower/upper arrays")
        else:
            raise ValueError(f"unknown boundary mode {self.mode!r}")

    # constructors

    @classmethod
    def constant(cls, alpha, a, b, entry=None, exit=None, t_shift=0) -> "BoundarySpec":
        return cls(alpha=alpha, mode="constant", a=float(a), b=float(b), entry=entry, exit=exit, t_shift=t_shift)

    @classmethod
    def functional(cls, alpha, g, h, entry=None, exit=None, t_shift=0) -> "BoundarySpec":
        return cls(alpha=alpha, mode="functional", g=g, h=h, entry=entry, exit=exit, t_shift=t_shift)

    @classmethod
    def recentered(cls, alpha, c, entry=None, exit=None, t_shift=0) -> "BoundarySpec":
        return cls(alpha=alpha, mode="recentered", c=float(c), entry=entry, exit=exit, t_shift=t_shift)

    @classmethod
    def explicit(cls, alpha, lower, upper, entry=None, exit=None, t_shift=0) -> "BoundarySpec":
        lo = np.asarray(lower, dtype=float)
        hi = np.asarray(upper, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lower/upper must be 1-d arrays of equal length")
        if np.any(lo >= hi):
            raise CrossingBoundaries("explicit windows must satisfy lower < upper")
        return cls(alpha=alpha, mode="explicit", lower=lo, upper=hi, entry=entry, exit=exit, t_shift=t_shift)

    def default_entry(self) -> tuple[float, float]:
        if self.entry is not None:
            return self.entry
        w = self.b - self.a
        if self.mode == "constant":
            return (self.a + DEFAULT_ENTRY_FRACTION * w, self.b - DEFAULT_ENTRY_FRACTION * w)
        if self.mode == "recentered":
            return (-self.c * (1 - 2 * DEFAULT_ENTRY_FRACTION), self.c * (1 - 2 * DEFAULT_ENTRY_FRACTION))
        raise ValueError("entry window must be given explicitly for this mode")

    def default_exit(self) -> tuple[float, float]:
        if self.exit is not None:
            return self.exit
        w = self.b - self.a
        if self.mode == "constant":
            return (self.a + DEFAULT_EXIT_FRACTION * w, self.b - DEFAULT_EXIT_FRACTION * w)
        if self.mode == "recentered":
            return (-self.c * (1 - 2 * DEFAULT_EXIT_FRACTION), self.c * (1 - 2 * DEFAULT_EXIT_FRACTION))
        raise ValueError("exit window must be given explicitly for this mode")

    def window_arrays(self, n: int, envr=None, x0: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
        """Materialize [lower_i, upper_i] for i = 0..n.

        Recentered windows need the realized environment to follow the
        quenched-mean path from the start time.  n**alpha is evaluated in
        floating point; windows are real intervals, never rounded to a
        lattice.
        """
        scale = float(n) ** self.alpha
        ii = np.arange(n + 1)
        if self.mode == "constant":
            lower = np.full(n + 1, self.a * scale)
            upper = np.full(n + 1, self.b * scale)
        elif self.mode == "functional":
            s = ii / n if n > 0 else np.zeros(1)
            lower = np.array([self.g(float(t)) for t in s]) * scale
            upper = np.array([self.h(float(t)) for t in s]) * scale
            if np.any(lower >= upper):
                raise CrossingBoundaries("functional boundaries must satisfy g < h on the grid")
        elif self.mode == "recentered":
            if envr is None:
                raise ValueError("recentered windows need the environment realization")
            t0 = self.t_shift
            base = envr.mean_prefix[t0 : t0 + n + 1] - envr.mean_prefix[t0]
            lower = x0 + base - self.c * scale
            upper = x0 + base + self.c * scale
        else:  # explicit
            if len(self.lower) != n + 1:
                raise ValueError(f"explicit windows have length {len(self.lower)}, expected {n + 1}")
            lower = self.lower.copy()
            upper = self.upper.copy()
        return lower, upper

    def scaled_entry(self, n: int) -> tuple[float, float]:
        a0, b0 = self.default_entry()
        if self.mode == "explicit":
            return (a0, b0)
        scale = float(n) ** self.alpha
        return (a0 * scale, b0 * scale)

    def scaled_exit(self, n: int) -> tuple[float, float]:
        ap, bp = self.default_exit()
        if self.mode == "explicit":
            return (ap, bp)
        scale = float(n) ** self.alpha
        return (ap * scale, bp * scale)


def lattice_index_bounds(
    lower: np.ndarray, upper: np.ndarray, origin: float, spacing: float
) -> tuple[np.ndarray, np.ndarray]:
    """Integer index ranges of lattice points origin + j*spacing inside each window.

    Membership is decided by direct comparison of the floating-point state
    value against the boundary (closed intervals), with the rounding of the
    initial ceil/floor guesses nudged until the comparisons agree.  An empty
    window yields jlo > jhi at that step.
    """
    jlo = np.ceil((lower - origin) / spacing).astype(np.int64)
    jhi = np.floor((upper - origin) / spacing).astype(np.int64)
    for _ in range(2):
        jlo = np.where(origin + (jlo - 1) * spacing >= lower, jlo - 1, jlo)
        jhi = np.where(origin + (jhi + 1) * spacing <= upper, jhi + 1, jhi)
    for _ in range(2):
        jlo = np.where(origin + jlo * spacing < lower, jlo + 1, jlo)
        jhi = np.where(origin + jhi * spacing > upper, jhi - 1, jhi)
    return jlo, jhi


def scalar_index_bounds(lo: float, hi: float, origin: float, spacing: float) -> tuple[int, int]:
    jlo, jhi = lattice_index_bounds(np.array([lo]), np.array([hi]), origin, spacing)
    return int(jlo[0]), int(jhi[0])
