"""Small-deviation probabilities for random walks in time-inhomogeneous
random environments.

The package estimates the decay exponent of the probability that a walk
stays inside a window of width ~ n**alpha for n steps, conditioned on a
realization of the environment, and compares measured exponents against
closed-form predictions built from the tube-survival rate function
gamma(beta).
"""

__version__ = "0.1.0"

from .environment import (
    EnvironmentModel,
    QuenchedEnvironment,
    StepLaw,
    check_assumptions,
    model_from_json,
    quenched_moments,
    sample_environment,
    sigma_decomposition,
)
from .boundaries import BoundarySpec
from .lattice import (
    SurvivalResult,
    enumerate_small,
    exact_exponent,
    exact_survival,
    two_walk_exponent,
)
from .mc import McEstimate, SplitConfig, mc_survival, split_survival
from .tube import (
    GammaEstimate,
    TubeProblem,
    WPath,
    gamma_estimate,
    gamma_properties_check,
    tube_survival_fixed,
    tube_survival_quenched,
    xbar_tail_diagnostic,
)
from .rates import (
    GammaTable,
    RatePrediction,
    c_gh,
    mogulskii_rate,
    quenched_vs_annealed_gap,
    rwre_rate,
    shao_rate,
)
from .coupling import CouplingRun, coupling_tail_report, skorokhod_couple

__all__ = [
    "BoundarySpec",
    "CouplingRun",
    "EnvironmentModel",
    "GammaEstimate",
    "GammaTable",
    "McEstimate",
    "QuenchedEnvironment",
    "RatePrediction",
    "SplitConfig",
    "StepLaw",
    "SurvivalResult",
    "TubeProblem",
    "WPath",
    "c_gh",
    "check_assumptions",
    "coupling_tail_report",
    "enumerate_small",
    "exact_exponent",
    "exact_survival",
    "gamma_estimate",
    "gamma_properties_check",
    "mc_survival",
    "model_from_json",
    "mogulskii_rate",
    "quenched_moments",
    "quenched_vs_annealed_gap",
    "rwre_rate",
    "sample_environment",
    "shao_rate",
    "sigma_decomposition",
    "skorokhod_couple",
    "split_survival",
    "tube_survival_fixed",
    "tube_survival_quenched",
    "two_walk_exponent",
    "xbar_tail_diagnostic",
]
