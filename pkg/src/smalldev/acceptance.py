"""Acceptance battery: the eleven desk-scale checks of the limit theory.

Each criterion is a function of a shared context (which caches the tube-rate
table so the expensive solves happen once) and returns a CriterionResult.
The CLI `acceptance` subcommand and tests/test_acceptance.py both run these.
"""

from __future__ import annotations

import math
import os
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass, field

import numpy as np

from .boundaries import BoundarySpec
from .environment import EnvironmentModel, QuenchedEnvironment, StepLaw, sample_environment
from .lattice import exact_exponent, exact_survival
from .mc import McEstimate, SplitConfig, mc_survival, split_survival
from .rates import GammaTable, c_gh, mogulskii_rate, shao_rate
from .rng import TAG_ORACLE, stream
from .tube import (
    TubeProblem,
    WPath,
    gamma_estimate,
    gamma_properties_check,
    tube_survival_fixed,
    tube_survival_quenched,
    xbar_tail_diagnostic,
)

SEED = 20260809
TABLE_T_LIST = (2.0, 3.0, 4.0, 5.0)
TABLE_NW = 50
BETA_GRID = (0.0, 0.5, -0.5, 1.0, -1.0, 2.0, -2.0)


def pm1_model() -> EnvironmentModel:
    return EnvironmentModel.of((StepLaw.lattice(1.0, [(-1, 0.5), (1, 0.5)]), 1.0))


def eps_model() -> EnvironmentModel:
    plus = StepLaw.lattice(1.0, [(0, 0.5), (2, 0.5)])
    minus = StepLaw.lattice(1.0, [(-2, 0.5), (0, 0.5)])
    return EnvironmentModel.of((plus, 0.5), (minus, 0.5))


def degenerate_env(model: EnvironmentModel, n: int) -> QuenchedEnvironment:
    return QuenchedEnvironment(model=model, indices=np.zeros(n, dtype=np.int64))


@dataclass
class CriterionResult:
    index: int
    name: str
    passed: bool
    seconds: float
    details: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "index": self.index,
            "name": self.name,
            "passed": bool(self.passed),
            "seconds": round(self.seconds, 3),
            "details": {k: _plain(v) for k, v in self.details.items()},
        }


def _plain(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items()}
    return v


class SuiteContext:
    """Caches the tube-rate estimates shared by criteria 4, 5 and 9."""

    def __init__(self, workers: int = 1):
        self.workers = workers
        self._gamma = {}
        self._warmed = False

    def warm(self):
        """Compile/load the kernels so criterion timers measure the work."""
        if self._warmed:
            return
        env = degenerate_env(pm1_model(), 16)
        b = BoundarySpec.constant(0.3, -1.0, 1.0)
        exact_survival(env, b, 16, 0.0)
        exact_exponent(env, b, 16, variant="sup")
        mc_survival(env, b, 16, 0.0, 128, seed=SEED)
        tube_survival_quenched(
            TubeProblem(a=0.0, b=1.0, beta=0.0, w=WPath.zeroed(0.01, 0.005), start=0.5)
        )
        from .coupling import TwoPointLaw, skorokhod_couple

        skorokhod_couple(TwoPointLaw(1.0, 0.5, 1.0), 4, seed=SEED)
        self._warmed = True

    def gamma_entry(self, beta: float):
        if beta not in self._gamma:
            k = BETA_GRID.index(beta) if beta in BETA_GRID else 99
            self._gamma[beta] = gamma_estimate(
                beta, TABLE_T_LIST, TABLE_NW, seed=SEED + k
            )
        return self._gamma[beta]

    def gamma_table(self) -> GammaTable:
        rows = [
            (beta, self.gamma_entry(beta).gamma_hat, self.gamma_entry(beta).ci_halfwidth)
            for beta in BETA_GRID
        ]
        return GammaTable.from_rows(rows)


def criterion_1(ctx: SuiteContext) -> CriterionResult:
    """gamma(0) recovery from the slope fit, beta = 0 needs one path."""
    ctx.warm()
    t0 = time.perf_counter()
    est = gamma_estimate(0.0, [4, 6, 8, 10, 12], 1, seed=SEED)
    elapsed = time.perf_counter() - t0
    target = math.pi**2 / 2.0
    rel = abs(est.gamma_hat - target) / target
    passed = rel <= 0.05 and elapsed < 120.0
    return CriterionResult(
        1,
        "gamma(0) within 5% of pi^2/2",
        passed,
        elapsed,
        {"gamma_hat": est.gamma_hat, "target": target, "rel_err": rel, "budget_s": 120},
    )


def criterion_2(ctx: SuiteContext) -> CriterionResult:
    """Fixed-tube finite-difference solver against the eigenseries."""
    ctx.warm()
    t0 = time.perf_counter()
    series = tube_survival_fixed(0.0, 1.0, 0.5, 1.0)
    prob, _ = tube_survival_quenched(
        TubeProblem(a=0.0, b=1.0, beta=0.0, w=WPath.zeroed(1.0, 0.005), start=0.5)
    )
    elapsed = time.perf_counter() - t0
    rel = abs(prob - series) / series
    return CriterionResult(
        2,
        "solver vs eigenseries at ([0,1], 0.5, 1): rel err <= 1e-3",
        rel <= 1e-3,
        elapsed,
        {"series": series, "solver": prob, "rel_err": rel},
    )


def criterion_3(ctx: SuiteContext) -> CriterionResult:
    """Constant-window reproduction for the plain +/-1 walk."""
    ctx.warm()
    model = pm1_model()
    boundary = BoundarySpec.constant(0.3, -1.0, 1.0)
    target = -math.pi**2 / 8.0
    t0 = time.perf_counter()
    exps = {n: exact_exponent(degenerate_env(model, n), boundary, n, variant="sup").exponent
            for n in (10**3, 10**5)}
    elapsed = time.perf_counter() - t0
    rel = abs(exps[10**5] / target - 1.0)
    gap3 = abs(exps[10**3] - target)
    gap5 = abs(exps[10**5] - target)
    within = rel <= 0.15
    shrinking = gap5 < gap3
    return CriterionResult(
        3,
        "plain-walk exponent near -pi^2/8 and gap shrinking from n=1e3 to 1e5",
        within and shrinking and elapsed < 60.0,
        elapsed,
        {
            "exponent_1e5": exps[10**5],
            "exponent_1e3": exps[10**3],
            "target": target,
            "rel_err_1e5": rel,
            "gap_1e3": gap3,
            "gap_1e5": gap5,
            "within_15pct": within,
            "gap_shrinks": shrinking,
            "budget_s": 60,
        },
    )


def _eps_exponents(n: int, seeds: int) -> np.ndarray:
    model = eps_model()
    boundary = BoundarySpec.constant(0.3, -1.0, 1.0)
    out = np.empty(seeds)
    for k in range(seeds):
        envr = sample_environment(model, n, SEED, replica=k)
        out[k] = exact_exponent(envr, boundary, n, variant="sup").exponent
    return out


def criterion_4(ctx: SuiteContext) -> CriterionResult:
    """Quenched exponent of the two-point environment against -gamma(1)/4."""
    ctx.warm()
    t0 = time.perf_counter()
    gamma1 = ctx.gamma_entry(1.0).gamma_hat
    exps = _eps_exponents(10**5, 20)
    elapsed = time.perf_counter() - t0
    mean = float(exps.mean())
    cv = float(abs(exps.std(ddof=1) / mean))
    predicted = -gamma1 / 4.0
    rel = abs(mean / predicted - 1.0)
    passed = rel <= 0.20 and cv <= 0.10 and elapsed < 600.0
    return CriterionResult(
        4,
        "environment exponent within 20% of -gamma(1)/4, seed CV <= 10%",
        passed,
        elapsed,
        {
            "mean_exponent": mean,
            "predicted": predicted,
            "gamma_1": gamma1,
            "rel_err": rel,
            "cv": cv,
            "seeds": 20,
            "budget_s": 600,
        },
    )


def criterion_5(ctx: SuiteContext) -> CriterionResult:
    """The environment strictly slows the walk below the classical rate."""
    ctx.warm()
    t0 = time.perf_counter()
    exps = _eps_exponents(10**5, 20)
    elapsed = time.perf_counter() - t0
    mean = float(exps.mean())
    threshold = -math.pi**2 * 2.0 / 8.0 * (1.0 - 0.2)
    return CriterionResult(
        5,
        "environment exponent below -pi^2(1+1)/8 within 20%",
        mean <= threshold,
        elapsed,
        {"mean_exponent": mean, "threshold": threshold},
    )


def criterion_6(ctx: SuiteContext) -> CriterionResult:
    """Recentering on the quenched mean removes the environment drift."""
    ctx.warm()
    model = eps_model()
    boundary = BoundarySpec.recentered(0.3, 1.0)
    target = -math.pi**2 / 8.0
    n = 10**5
    t0 = time.perf_counter()
    exps = []
    for k in range(5):
        envr = sample_environment(model, n, SEED, replica=k)
        exps.append(exact_exponent(envr, boundary, n, variant="sup").exponent)
    elapsed = time.perf_counter() - t0
    mean = float(np.mean(exps))
    rel = abs(mean / target - 1.0)
    return CriterionResult(
        6,
        "recentered-window exponent within 15% of -pi^2/8",
        rel <= 0.15,
        elapsed,
        {"mean_exponent": mean, "target": target, "rel_err": rel},
    )


def criterion_7(ctx: SuiteContext) -> CriterionResult:
    """Moving boundary: quadrature constant and the DP exponent."""
    ctx.warm()
    t0 = time.perf_counter()

    def g(s):
        return 0.0

    def h(s):
        return 1.0 + s

    c_val = c_gh(g, h)
    quad_ok = abs(c_val - 0.5) <= 1e-6
    n = 10**5
    model = pm1_model()
    boundary = BoundarySpec.functional(0.3, g, h)
    x0 = float(math.ceil(0.5 * n**0.3))
    res = exact_survival(degenerate_env(model, n), boundary, n, x0=x0)
    target = -c_val * math.pi**2 / 2.0
    rel = abs(res.exponent / target - 1.0)
    elapsed = time.perf_counter() - t0
    return CriterionResult(
        7,
        "moving window: C_{g,h} quadrature exact, DP exponent within 20%",
        quad_ok and rel <= 0.20,
        elapsed,
        {"c_gh": c_val, "exponent": res.exponent, "target": target, "rel_err": rel, "x0": x0},
    )


def _random_small_instance(k: int):
    rng = stream(SEED, TAG_ORACLE, k)
    n = int(rng.integers(4, 13))
    support = int(rng.integers(1, 3))  # max offset magnitude
    raw = rng.random(support) + 0.1
    half = raw / (2.0 * raw.sum())
    pmf = [(-o, half[o - 1]) for o in range(1, support + 1)]
    pmf += [(o, half[o - 1]) for o in range(1, support + 1)]
    rest = 1.0 - 2.0 * half.sum()
    if rest > 0:
        pmf.append((0, rest))
    law = StepLaw.lattice(1.0, pmf)
    model = EnvironmentModel.of((law, 1.0))
    half_width = float(rng.uniform(1.5, 3.5))
    boundary = BoundarySpec.explicit(
        0.3, np.full(n + 1, -half_width), np.full(n + 1, half_width)
    )
    return model, boundary, n


def criterion_8(ctx: SuiteContext) -> CriterionResult:
    """Monte Carlo vs DP: naive on small instances, splitting on the long one."""
    ctx.warm()
    t0 = time.perf_counter()
    reps = 10**5
    worst_z = 0.0
    for k in range(20):
        model, boundary, n = _random_small_instance(k)
        envr = degenerate_env(model, n)
        truth = math.exp(exact_survival(envr, boundary, n, 0.0).log_prob)
        est = mc_survival(envr, boundary, n, 0.0, reps, seed=SEED + k)
        se = math.sqrt(truth * (1.0 - truth) / reps)
        z = abs(est.probability - truth) / se if se > 0 else 0.0
        worst_z = max(worst_z, z)
    naive_ok = worst_z <= 3.0

    n, alpha = 2000, 0.45
    gauss = EnvironmentModel.of((StepLaw.gaussian(0.0, 1.0), 1.0))
    genv = degenerate_env(gauss, n)
    bc = BoundarySpec.constant(alpha, -1.0, 1.0)
    split = split_survival(genv, bc, n, 0.0, SplitConfig(d_blocks=1, particles=20000), seed=SEED)
    surrogate = _fine_lattice_surrogate(n, bc)
    z_split = abs(split.log_prob - surrogate) / split.stderr
    split_ok = z_split <= 3.0
    elapsed = time.perf_counter() - t0
    return CriterionResult(
        8,
        "MC within 3 sigma of DP (20 small instances; splitting at n=2000)",
        naive_ok and split_ok,
        elapsed,
        {
            "worst_naive_z": worst_z,
            "split_log": split.log_prob,
            "surrogate_log": surrogate,
            "split_z": z_split,
        },
    )


def _fine_lattice_surrogate(n: int, boundary: BoundarySpec, spacing: float = 0.05) -> float:
    """Exact DP for the standard normal step quantized to a fine lattice."""
    from scipy.stats import norm

    kmax = int(math.ceil(6.0 / spacing))
    ks = np.arange(-kmax, kmax + 1)
    p = norm.cdf((ks + 0.5) * spacing) - norm.cdf((ks - 0.5) * spacing)
    p /= p.sum()
    law = StepLaw.lattice(spacing, list(zip(ks.tolist(), p.tolist())))
    model = EnvironmentModel.of((law, 1.0))
    envr = degenerate_env(model, n)
    return exact_survival(envr, boundary, n, 0.0).log_prob


def criterion_9(ctx: SuiteContext) -> CriterionResult:
    """Shape of the rate function: positive, even, midpoint-convex, above the bound."""
    ctx.warm()
    t0 = time.perf_counter()
    ests = [ctx.gamma_entry(beta) for beta in BETA_GRID]
    report = gamma_properties_check(ests)
    elapsed = time.perf_counter() - t0
    return CriterionResult(
        9,
        "rate-function property suite on {0, +/-0.5, +/-1, +/-2}",
        report.all_pass,
        elapsed,
        {
            "positivity": report.positivity,
            "evenness": report.evenness,
            "convexity": report.convexity,
            "lower_bound": report.lower_bound,
            "gamma": {str(e.beta): e.gamma_hat for e in ests},
            "ci": {str(e.beta): e.ci_halfwidth for e in ests},
        },
    )


def criterion_10(ctx: SuiteContext) -> CriterionResult:
    """Exponential moments of -log survival stay finite at desk scale."""
    ctx.warm()
    t0 = time.perf_counter()
    rep = xbar_tail_diagnostic(1.0, 5.0, 1000, [0.0, 1.0], seed=SEED)
    x = rep.xbars
    half = x[:500]
    m_half = float(np.mean(np.exp(half - half.max())) * math.exp(half.max()))
    m_full = float(np.mean(np.exp(x - x.max())) * math.exp(x.max()))
    ratio = m_full / m_half
    elapsed = time.perf_counter() - t0
    slope_ok = rep.tail_slope < 0.0 and rep.tail_r2 >= 0.8
    stable = 0.5 <= ratio <= 2.0
    return CriterionResult(
        10,
        "tail of -log P: negative log-frequency slope, stable empirical MGF",
        slope_ok and stable,
        elapsed,
        {
            "tail_slope": rep.tail_slope,
            "tail_r2": rep.tail_r2,
            "mgf_500": m_half,
            "mgf_1000": m_full,
            "ratio": ratio,
        },
    )


def _run_cli(argv: list[str]) -> None:
    proc = subprocess.run(
        [sys.executable, "-m", "smalldev.cli", *argv],
        capture_output=True,
        text=True,
        check=False,
    )
    if proc.returncode != 0:
        raise RuntimeError(f"cli {argv[0]} failed: {proc.stderr.strip()}")


def criterion_11(ctx: SuiteContext) -> CriterionResult:
    """Byte-identical outputs for every subcommand across worker counts."""
    t0 = time.perf_counter()
    mismatches = []
    with tempfile.TemporaryDirectory() as tmp:
        eps_path = os.path.join(tmp, "eps.json")
        pm1_path = os.path.join(tmp, "pm1.json")
        table_path = os.path.join(tmp, "table.csv")
        with open(eps_path, "w", encoding="utf-8") as fh:
            fh.write(
                '{"components": ['
                '{"kind": "lattice", "spacing": 1, "pmf": [[0, 0.5], [2, 0.5]], "weight": 0.5},'
                '{"kind": "lattice", "spacing": 1, "pmf": [[-2, 0.5], [0, 0.5]], "weight": 0.5}]}'
            )
        with open(pm1_path, "w", encoding="utf-8") as fh:
            fh.write(
                '{"components": ['
                '{"kind": "lattice", "spacing": 1, "pmf": [[-1, 0.5], [1, 0.5]], "weight": 1.0}]}'
            )
        with open(table_path, "w", encoding="utf-8") as fh:
            fh.write("beta,gamma_hat,ci\n0.0,4.9348,0.001\n1.0,9.9,0.3\n2.0,33.0,4.0\n")
        cases = {
            "exponent": ["exponent", "--model", eps_path, "--n", "2000", "--seeds", "3",
                         "--seed", "5"],
            "mc": ["mc", "--model", pm1_path, "--n", "64", "--method", "naive",
                   "--reps", "2000", "--seed", "5"],
            "gamma": ["gamma", "--beta", "0", "--t-list", "2,3,4", "--nw", "1", "--seed", "5"],
            "gamma-table": ["gamma-table", "--betas", "0", "--t-list", "2,3,4", "--nw", "1",
                            "--seed", "5"],
            "predict": ["predict", "--model", eps_path, "--gamma-table", table_path,
                        "--seed", "5"],
            "couple": ["couple", "--n", "32", "--reps", "1000", "--seed", "5"],
            "convergence": ["convergence", "--model", pm1_path, "--n-list", "100,200",
                            "--seeds", "2", "--seed", "5"],
        }
        for name, argv in cases.items():
            out1 = os.path.join(tmp, f"{name}_w1.csv")
            out2 = os.path.join(tmp, f"{name}_w2.csv")
            _run_cli([*argv, "--workers", "1", "--out", out1])
            _run_cli([*argv, "--workers", "2", "--out", out2])
            with open(out1, "rb") as f1, open(out2, "rb") as f2:
                if f1.read() != f2.read():
                    mismatches.append(name)
    elapsed = time.perf_counter() - t0
    return CriterionResult(
        11,
        "subcommand outputs byte-identical across worker counts",
        not mismatches,
        elapsed,
        {"mismatches": mismatches, "subcommands": 7},
    )


CRITERIA = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
    10: criterion_10,
    11: criterion_11,
}


def run_suite(workers: int = 1, indices=None) -> list[CriterionResult]:
    ctx = SuiteContext(workers=workers)
    results = []
    for idx in sorted(indices or CRITERIA):
        result = CRITERIA[idx](ctx)
        results.append(result)
        status = "PASS" if result.passed else "FAIL"
        print(
            f"[{status}] criterion {idx}: {result.name} ({result.seconds:.1f}s)",
            file=sys.stderr,
        )
    return results
