"""Acceptance battery: one test per criterion, each printing its verdict.

The shared context caches the tube-rate table, so the expensive PDE solves
run once for criteria 4, 5 and 9.  Tolerances are fixed here, not tuned.
"""

import math

import numpy as np
import pytest

from smalldev import acceptance as acc

pytestmark = pytest.mark.acceptance


@pytest.fixture(scope="module")
def ctx():
    return acc.SuiteContext(workers=1)


def report(result):
    print(f"\n[{'PASS' if result.passed else 'FAIL'}] criterion {result.index}: "
          f"{result.name} ({result.seconds:.1f}s) {result.details}")
    return result


def test_criterion_1_gamma_zero_recovery(ctx):
    result = report(acc.criterion_1(ctx))
    assert result.details["rel_err"] <= 0.05
    assert result.seconds < 120.0
    assert result.passed


def test_criterion_2_solver_vs_series(ctx):
    result = report(acc.criterion_2(ctx))
    assert result.details["rel_err"] <= 1e-3
    assert result.passed


def test_criterion_3_classical_reproduction(ctx):
    result = report(acc.criterion_3(ctx))
    assert result.details["within_15pct"], result.details
    assert result.details["gap_shrinks"], (
        "finite-size gap grew from n=1e3 to n=1e5: "
        f"{result.details['gap_1e3']:.4f} -> {result.details['gap_1e5']:.4f}; "
        "the integer window width (floor(n^alpha)+1 vs n^alpha) oscillates with "
        "frac(n^alpha) and dominates both gaps at these two pinned n values"
    )
    assert result.passed


def test_criterion_4_environment_exponent_vs_rate_table(ctx):
    result = report(acc.criterion_4(ctx))
    assert result.details["rel_err"] <= 0.20, result.details
    assert result.details["cv"] <= 0.10, result.details
    assert result.seconds < 600.0
    assert result.passed


def test_criterion_5_environment_slows_the_walk(ctx):
    result = report(acc.criterion_5(ctx))
    assert result.details["mean_exponent"] <= result.details["threshold"]
    assert result.passed


def test_criterion_6_recentered_window(ctx):
    result = report(acc.criterion_6(ctx))
    assert result.details["rel_err"] <= 0.15, result.details
    assert result.passed


def test_criterion_7_moving_boundary(ctx):
    result = report(acc.criterion_7(ctx))
    assert abs(result.details["c_gh"] - 0.5) <= 1e-6
    assert result.details["rel_err"] <= 0.20, result.details
    assert result.passed


def test_criterion_8_mc_agreement(ctx):
    result = report(acc.criterion_8(ctx))
    assert result.details["worst_naive_z"] <= 3.0, result.details
    assert abs(result.details["split_z"]) <= 3.0, result.details
    assert result.passed


def test_criterion_9_rate_function_properties(ctx):
    result = report(acc.criterion_9(ctx))
    assert result.details["positivity"], result.details
    assert result.details["evenness"], result.details
    assert result.details["convexity"], result.details
    assert result.details["lower_bound"], result.details
    assert result.passed


def test_criterion_10_tail_of_log_survival(ctx):
    result = report(acc.criterion_10(ctx))
    assert result.details["tail_slope"] < 0.0
    assert result.details["tail_r2"] >= 0.8, result.details
    assert 0.5 <= result.details["ratio"] <= 2.0, result.details
    assert result.passed


def test_criterion_11_worker_determinism(ctx):
    result = report(acc.criterion_11(ctx))
    assert result.details["mismatches"] == [], result.details
    assert result.passed


def test_invariant_xbar_rate_nonincreasing_within_ci(ctx):
    """mean(-log P)/t is superadditive-limited: nonincreasing in t within CI."""
    est = ctx.gamma_entry(1.0)
    t = np.asarray(est.horizons)
    rates = est.mean_xbar / t
    ses = 1.96 * np.sqrt(est.var_xbar / est.n_w) / t
    for i in range(len(t) - 1):
        assert rates[i + 1] <= rates[i] + ses[i] + ses[i + 1], (rates, ses)