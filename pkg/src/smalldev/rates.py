"""Closed-form predicted exponents.

The limit exponent for a centered walk in window [a n**alpha, b n**alpha]
is -sigma_Q^2 gamma(sigma_A / sigma_Q) / (b - a)^2, where gamma is the tube
rate function; gamma(0) = pi^2 / 2 recovers the classical constant-window
rate -pi^2 sigma^2 / (2 (b-a)^2).  Moving windows integrate the inverse
squared width; recentered windows decouple the environment and decay at the
classical rate with the noise variance alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .boundaries import CrossingBoundaries

GAMMA0 = math.pi**2 / 2.0


class BadWindow(ValueError):
    """Window does not satisfy a < 0 < b."""


class TableGap(KeyError):
    """Requested beta lies outside the tabulated range."""


@dataclass(frozen=True)
class GammaTable:
    """Tabulated tube-rate values with confidence halfwidths, sorted by beta."""

    betas: np.ndarray
    gammas: np.ndarray
    cis: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.betas, dtype=float)
        order = np.argsort(b)
        object.__setattr__(self, "betas", b[order])
        object.__setattr__(self, "gammas", np.asarray(self.gammas, dtype=float)[order])
        object.__setattr__(self, "cis", np.asarray(self.cis, dtype=float)[order])

    @classmethod
    def from_rows(cls, rows: Sequence[tuple[float, float, float]]) -> "GammaTable":
        arr = np.asarray(rows, dtype=float)
        return cls(betas=arr[:, 0], gammas=arr[:, 1], cis=arr[:, 2])

    @classmethod
    def exact_at_zero(cls) -> "GammaTable":
        """Single-entry table carrying the known value gamma(0) = pi^2/2."""
        return cls(betas=np.array([0.0]), gammas=np.array([GAMMA0]), cis=np.array([0.0]))

    def lookup(self, beta: float) -> tuple[float, float]:
        """Piecewise-linear value and a CI widened by the neighboring spread.

        Convexity makes the linear interpolant an upper bound, so the
        widening |gamma_i+1 - gamma_i| * frac * (1 - frac) keeps the band
        conservative between nodes.
        """
        b = self.betas
        if beta < b[0] - 1e-12 or beta > b[-1] + 1e-12:
            raise TableGap(f"beta={beta} outside table range [{b[0]}, {b[-1]}]")
        beta = min(max(beta, b[0]), b[-1])
        i = int(np.searchsorted(b, beta, side="right")) - 1
        i = min(max(i, 0), len(b) - 2) if len(b) > 1 else 0
        if len(b) == 1 or beta == b[i]:
            return float(self.gammas[i]), float(self.cis[i])
        frac = (beta - b[i]) / (b[i + 1] - b[i])
        gam = (1 - frac) * self.gammas[i] + frac * self.gammas[i + 1]
        ci = (1 - frac) * self.cis[i] + frac * self.cis[i + 1]
        ci += abs(self.gammas[i + 1] - self.gammas[i]) * frac * (1 - frac)
        return float(gam), float(ci)


@dataclass(frozen=True)
class RatePrediction:
    formula: str
    exponent: float
    ci_halfwidth: float = 0.0
    gamma_value: float | None = None
    gamma_ci: float | None = None
    inputs: tuple = ()


def mogulskii_rate(sigma2: float, a: float, b: float) -> float:
    """Classical constant-window rate -pi^2 sigma^2 / (2 (b-a)^2)."""
    if not a < 0.0 < b:
        raise BadWindow(f"need a < 0 < b, got [{a}, {b}]")
    if sigma2 <= 0.0:
        raise ValueError("sigma2 must be positive")
    return -(math.pi**2) * sigma2 / (2.0 * (b - a) ** 2)


def rwre_rate(
    sigmaA2: float, sigmaQ2: float, a: float, b: float, gamma_table: GammaTable
) -> RatePrediction:
    """Environment-aware rate -sigma_Q^2 gamma(sigma_A/sigma_Q) / (b-a)^2."""
    if sigmaQ2 <= 0.0:
        raise ValueError("sigmaQ2 must be positive")
    if not a < 0.0 < b:
        raise BadWindow(f"need a < 0 < b, got [{a}, {b}]")
    beta = math.sqrt(sigmaA2 / sigmaQ2)
    gam, ci = gamma_table.lookup(beta)
    width2 = (b - a) ** 2
    return RatePrediction(
        formula="rwre",
        exponent=-sigmaQ2 * gam / width2,
        ci_halfwidth=sigmaQ2 * ci / width2,
        gamma_value=gam,
        gamma_ci=ci,
        inputs=(sigmaA2, sigmaQ2, a, b),
    )


def shao_rate(sigmaQ2: float, c: float) -> float:
    """Rate for the window recentered on the quenched mean: -pi^2 sigma_Q^2 / (8 c^2)."""
    if c <= 0.0:
        raise ValueError("c must be positive")
    return -(math.pi**2) * sigmaQ2 / (8.0 * c**2)


def c_gh(g, h, tol: float = 1e-8, max_points: int = 200001) -> float:
    """Boundary functional: integral over [0,1] of (h - g)^(-2).

    Accepts callables (refined until the composite Simpson value moves by
    less than tol) or matching sample arrays on a uniform grid with an odd
    number of points (at least 101).
    """
    if callable(g) and callable(h):
        pts = 101
        last = _simpson_inv_sq(_sample(g, pts), _sample(h, pts))
        while pts < max_points:
            pts = 2 * pts - 1
            cur = _simpson_inv_sq(_sample(g, pts), _sample(h, pts))
            if abs(cur - last) < tol:
                return cur
            last = cur
        raise RuntimeError("quadrature did not converge; boundaries too rough")
    g_arr = np.asarray(g, dtype=float)
    h_arr = np.asarray(h, dtype=float)
    if g_arr.shape != h_arr.shape or g_arr.ndim != 1:
        raise ValueError("g and h grids must be 1-d and equally long")
    if len(g_arr) < 101:
        raise ValueError("need at least 101 grid points")
    if len(g_arr) % 2 == 0:
        raise ValueError("composite Simpson needs an odd number of points")
    return _simpson_inv_sq(g_arr, h_arr)


def _sample(f: Callable[[float], float], pts: int) -> np.ndarray:
    s = np.linspace(0.0, 1.0, pts)
    return np.array([f(float(v)) for v in s])


def _simpson_inv_sq(g_arr: np.ndarray, h_arr: np.ndarray) -> float:
    diff = h_arr - g_arr
    if np.any(diff <= 0.0):
        raise CrossingBoundaries("boundaries cross: need g < h everywhere")
    y = 1.0 / diff**2
    n = len(y) - 1
    step = 1.0 / n
    return float(step / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum()))


def quenched_vs_annealed_gap(
    sigmaA2: float, sigmaQ2: float, c: float, gamma_table: GammaTable
) -> tuple[float, float, float]:
    """Compare the recentered-window rate against the centered-window rate.

    Returns (recentered, centered, gap); the gap is negative whenever the
    environment is active, because gamma(beta) > gamma(0) for beta > 0.
    """
    if sigmaA2 < 0.0:
        raise ValueError("sigmaA2 must be >= 0")
    recentered = shao_rate(sigmaQ2, c)
    centered = rwre_rate(sigmaA2, sigmaQ2, -c, c, gamma_table).exponent
    return recentered, centered, centered - recentered
