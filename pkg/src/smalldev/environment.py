"""Random environment models.

An environment is an i.i.d. sequence of step laws: at each time step the
walk draws its increment from the law attached to that step.  Models here
are finite mixtures of lattice or Gaussian step laws.  The module computes
the variance decomposition (annealed variance of the per-step means vs.
mean per-step variance), samples environment realizations, and reports the
moment conditions the limit theory needs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .rng import TAG_ENV, stream

CENTERING_TOL = 1e-12


class NonCentered(ValueError):
    """Mixture of per-step means is not centered."""


class ZeroQuenchedVariance(ValueError):
    """Every component is deterministic: the walk has no quenched noise."""


class OutOfRange(IndexError):
    """Prefix index outside the realized environment."""


class UnsupportedLaw(ValueError):
    """No closed-form moment for this component."""


@dataclass(frozen=True)
class StepLaw:
    """One step distribution: integer lattice pmf times a spacing, or Gaussian."""

    kind: str
    spacing: float = 1.0
    offsets: tuple[int, ...] = ()
    probs: tuple[float, ...] = ()
    gauss_mean: float = 0.0
    gauss_var: float = 0.0

    def __post_init__(self):
        if self.kind == "lattice":
            if self.spacing <= 0:
                raise ValueError("lattice spacing must be > 0")
            if len(self.offsets) != len(self.probs) or not self.offsets:
                raise ValueError("lattice law needs matching offsets/probs")
            if any(p < 0 for p in self.probs):
                raise ValueError("negative probability")
            if abs(sum(self.probs) - 1.0) > CENTERING_TOL:
                raise ValueError("lattice probabilities must sum to 1")
            if any(o != int(o) for o in self.offsets):
                raise ValueError("lattice offsets must be integers")
        elif self.kind == "gaussian":
            if self.gauss_var < 0:
                raise ValueError("gaussian variance must be >= 0")
        else:
            raise ValueError(f"unknown step law kind: {self.kind!r}")

    @classmethod
    def lattice(cls, spacing: float, pmf: Sequence[tuple[int, float]] | dict) -> "StepLaw":
        items = sorted(pmf.items()) if isinstance(pmf, dict) else sorted(pmf)
        offsets = tuple(int(o) for o, _ in items)
        probs = tuple(float(p) for _, p in items)
        return cls(kind="lattice", spacing=float(spacing), offsets=offsets, probs=probs)

    @classmethod
    def gaussian(cls, mean: float, variance: float) -> "StepLaw":
        return cls(kind="gaussian", gauss_mean=float(mean), gauss_var=float(variance))

    @property
    def mean(self) -> float:
        if self.kind == "lattice":
            return self.spacing * sum(p * o for o, p in zip(self.offsets, self.probs))
        return self.gauss_mean

    @property
    def variance(self) -> float:
        if self.kind == "lattice":
            m = self.mean
            ex2 = self.spacing**2 * sum(p * o * o for o, p in zip(self.offsets, self.probs))
            return max(ex2 - m * m, 0.0)
        return self.gauss_var

    def abs_central_moment(self, lam: float) -> float:
        """E|X - EX|^lam, in closed form.

        Lattice laws sum the pmf directly.  For Gaussians the absolute-moment
        identity E|Z|^lam = sigma^lam * 2^(lam/2) * Gamma((lam+1)/2) / sqrt(pi)
        holds for every real lam > -1.
        """
        if lam < 0:
            raise UnsupportedLaw("negative moment order")
        if self.kind == "lattice":
            m = self.mean
            return sum(p * abs(self.spacing * o - m) ** lam for o, p in zip(self.offsets, self.probs))
        sigma = math.sqrt(self.gauss_var)
        if sigma == 0.0:
            return 0.0
        return sigma**lam * 2.0 ** (lam / 2.0) * math.gamma((lam + 1.0) / 2.0) / math.sqrt(math.pi)


@dataclass(frozen=True)
class EnvironmentModel:
    """Finite mixture of step laws; the environment draws one per time step."""

    components: tuple[StepLaw, ...]
    weights: tuple[float, ...]
    sigma_a2: float = field(init=False)
    sigma_q2: float = field(init=False)

    def __post_init__(self):
        if len(self.components) != len(self.weights) or not self.components:
            raise ValueError("components and weights must match and be nonempty")
        if any(w < 0 for w in self.weights):
            raise ValueError("negative weight")
        if abs(sum(self.weights) - 1.0) > CENTERING_TOL:
            raise ValueError("weights must sum to 1")
        a2, q2 = sigma_decomposition(self)
        object.__setattr__(self, "sigma_a2", a2)
        object.__setattr__(self, "sigma_q2", q2)

    @classmethod
    def of(cls, *pairs: tuple[StepLaw, float]) -> "EnvironmentModel":
        laws, weights = zip(*pairs)
        return cls(components=tuple(laws), weights=tuple(float(w) for w in weights))

    @property
    def mixture_mean(self) -> float:
        return sum(w * c.mean for c, w in zip(self.components, self.weights))

    @property
    def total_variance(self) -> float:
        """Variance of one step under the joint (annealed) law."""
        return self.sigma_a2 + self.sigma_q2

    @property
    def beta(self) -> float:
        """Drift-to-noise ratio sigma_A / sigma_Q of the environment."""
        return math.sqrt(self.sigma_a2 / self.sigma_q2)

    def component_means(self) -> np.ndarray:
        return np.array([c.mean for c in self.components])

    def component_variances(self) -> np.ndarray:
        return np.array([c.variance for c in self.components])


def sigma_decomposition(model: EnvironmentModel | Sequence) -> tuple[float, float]:
    """Split the step variance into environment and noise parts.

    Returns (sigma_a2, sigma_q2): the weighted second moment of the component
    means, and the weighted mean of the component variances.  Rejects models
    whose mean of means is not zero (no silent recentering) and models with
    zero quenched variance.
    """
    components, weights = _components_weights(model)
    mean_of_means = sum(w * c.mean for c, w in zip(components, weights))
    if abs(mean_of_means) > CENTERING_TOL:
        raise NonCentered(f"mixture mean {mean_of_means!r} exceeds {CENTERING_TOL}")
    sigma_a2 = sum(w * c.mean**2 for c, w in zip(components, weights))
    sigma_q2 = sum(w * c.variance for c, w in zip(components, weights))
    if sigma_q2 <= 0.0:
        raise ZeroQuenchedVariance("all components are deterministic")
    return sigma_a2, sigma_q2


def _components_weights(model) -> tuple[tuple[StepLaw, ...], tuple[float, ...]]:
    if isinstance(model, EnvironmentModel):
        return model.components, model.weights
    laws, weights = zip(*model)
    return tuple(laws), tuple(weights)


@dataclass(frozen=True)
class QuenchedEnvironment:
    """A realized sequence of component indices plus the model that drew it."""

    model: EnvironmentModel
    indices: np.ndarray
    seed_record: tuple[int, int, int] | None = None

    def __post_init__(self):
        object.__setattr__(self, "indices", np.asarray(self.indices, dtype=np.int64))

    def __len__(self) -> int:
        return int(self.indices.shape[0])

    @cached_property
    def mean_prefix(self) -> np.ndarray:
        """M_k = quenched mean of the walk after k steps (length N+1)."""
        means = self.model.component_means()[self.indices]
        out = np.zeros(len(self) + 1)
        np.cumsum(means, out=out[1:])
        return out

    @cached_property
    def var_prefix(self) -> np.ndarray:
        """Gamma_k = quenched variance of the centered walk after k steps."""
        variances = self.model.component_variances()[self.indices]
        out = np.zeros(len(self) + 1)
        np.cumsum(variances, out=out[1:])
        return out

    def shifted(self, j: int) -> "QuenchedEnvironment":
        """Environment seen after dropping the first j steps."""
        if not 0 <= j <= len(self):
            raise OutOfRange(f"shift {j} outside [0, {len(self)}]")
        return QuenchedEnvironment(model=self.model, indices=self.indices[j:])


def sample_environment(model: EnvironmentModel, n: int, seed: int, replica: int = 0) -> QuenchedEnvironment:
    """Draw n i.i.d. component indices; deterministic given (seed, replica)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    rng = stream(seed, TAG_ENV, replica)
    cumw = np.cumsum(np.asarray(model.weights))
    cumw[-1] = 1.0
    idx = np.searchsorted(cumw, rng.random(n), side="right")
    return QuenchedEnvironment(model=model, indices=idx, seed_record=(seed, TAG_ENV, replica))


def quenched_moments(envr: QuenchedEnvironment, k: int) -> tuple[float, float]:
    """(M_k, Gamma_k): quenched mean and variance of the walk after k steps."""
    if not 0 <= k <= len(envr):
        raise OutOfRange(f"k={k} outside [0, {len(envr)}]")
    return float(envr.mean_prefix[k]), float(envr.var_prefix[k])


@dataclass(frozen=True)
class AssumptionReport:
    """Moment diagnostics for the limit theorem's hypotheses.

    Both thresholds for the auxiliary order lambda0 are reported: 2/alpha
    (almost-sure convergence regime) and 1/alpha (in-probability regime).
    Finite samples cannot distinguish the two modes, so the report states
    both without picking one.
    """

    lambda1: float
    lambda2: float
    lambda3: float
    alpha: float
    mean_abs_moment: float  # E |M_1|^lambda1
    noise_moment: float  # E [ (E_mu |U_1|^lambda2)^lambda3 ]
    lambda0_as: float  # 2 / alpha
    lambda0_prob: float  # 1 / alpha
    mean_moment_pass_as: bool
    mean_moment_pass_prob: bool
    noise_moment_pass_as: bool
    noise_moment_pass_prob: bool

    @property
    def all_pass_as(self) -> bool:
        return self.mean_moment_pass_as and self.noise_moment_pass_as

    @property
    def all_pass_prob(self) -> bool:
        return self.mean_moment_pass_prob and self.noise_moment_pass_prob


def check_assumptions(
    model: EnvironmentModel,
    lambda1: float,
    lambda2: float,
    lambda3: float,
    alpha: float,
) -> AssumptionReport:
    """Evaluate the moment conditions for the given orders and window scale."""
    if lambda1 <= 2 or lambda2 <= 2 or lambda3 <= 2:
        raise ValueError("lambda orders must all exceed 2")
    if not 0.0 < alpha < 0.5:
        raise ValueError("alpha must lie in (0, 1/2)")
    weights = model.weights
    mean_abs = sum(w * abs(c.mean) ** lambda1 for c, w in zip(model.components, weights))
    noise = sum(w * c.abs_central_moment(lambda2) ** lambda3 for c, w in zip(model.components, weights))
    lambda0_as = 2.0 / alpha
    lambda0_prob = 1.0 / alpha
    # Finite mixtures of lattice/Gaussian laws always have finite moments, so
    # the pass flags reduce to the order inequalities.
    mean_ok = {t: math.isfinite(mean_abs) and lambda1 > t for t in (lambda0_as, lambda0_prob)}
    noise_ok = {
        t: math.isfinite(noise) and lambda3 > max(t / 2.0, 2.0)
        for t in (lambda0_as, lambda0_prob)
    }
    return AssumptionReport(
        lambda1=lambda1,
        lambda2=lambda2,
        lambda3=lambda3,
        alpha=alpha,
        mean_abs_moment=mean_abs,
        noise_moment=noise,
        lambda0_as=lambda0_as,
        lambda0_prob=lambda0_prob,
        mean_moment_pass_as=mean_ok[lambda0_as],
        mean_moment_pass_prob=mean_ok[lambda0_prob],
        noise_moment_pass_as=noise_ok[lambda0_as],
        noise_moment_pass_prob=noise_ok[lambda0_prob],
    )


def model_from_json(doc: str | dict) -> EnvironmentModel:
    """Build a model from its JSON description.

    Expected shape::

        {"components": [
            {"kind": "lattice", "spacing": 1, "pmf": [[-2, 0.5], [0, 0.5]], "weight": 0.5},
            {"kind": "gaussian", "mean": 1.0, "variance": 1.0, "weight": 0.5}
        ]}
    """
    if isinstance(doc, str):
        doc = json.loads(doc)
    laws = []
    weights = []
    for comp in doc["components"]:
        kind = comp["kind"]
        if kind == "lattice":
            laws.append(StepLaw.lattice(comp.get("spacing", 1.0), [tuple(x) for x in comp["pmf"]]))
        elif kind == "gaussian":
            laws.append(StepLaw.gaussian(comp["mean"], comp["variance"]))
        else:
            raise ValueError(f"unknown component kind: {kind!r}")
        weights.append(float(comp["weight"]))
    return EnvironmentModel(components=tuple(laws), weights=tuple(weights))


def model_to_json(model: EnvironmentModel) -> dict:
    comps = []
    for law, w in zip(model.components, model.weights):
        if law.kind == "lattice":
            comps.append(
                {
                    "kind": "lattice",
                    "spacing": law.spacing,
                    "pmf": [[o, p] for o, p in zip(law.offsets, law.probs)],
                    "weight": w,
                }
            )
        else:
            comps.append(
                {"kind": "gaussian", "mean": law.gauss_mean, "variance": law.gauss_var, "weight": w}
            )
    return {"components": comps}


def load_model(path) -> EnvironmentModel:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_json(json.load(fh))
