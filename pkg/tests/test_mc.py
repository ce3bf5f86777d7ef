import math

import numpy as np
import pytest

from smalldev.boundaries import BoundarySpec
from smalldev.environment import sample_environment
from smalldev.lattice import exact_survival
from smalldev.mc import McEstimate, SplitConfig, mc_survival, split_survival


def fixed_window(n, lo, hi, alpha=0.3):
    return BoundarySpec.explicit(alpha, np.full(n + 1, float(lo)), np.full(n + 1, float(hi)))


class TestSplitConfig:
    def test_block_layout(self):
        cfg = SplitConfig(d_blocks=1, particles=100)
        ends = cfg.level_ends(2000, 0.45)
        t_len = cfg.block_length(2000, 0.45)
        assert t_len == 935
        assert ends == [935, 1870, 2000]

    def test_rejects_no_complete_block(self):
        cfg = SplitConfig(d_blocks=4, particles=100)
        with pytest.raises(ValueError):
            cfg.level_ends(2000, 0.45)

    def test_validation(self):
        with pytest.raises(ValueError):
            SplitConfig(d_blocks=0)
        with pytest.raises(ValueError):
            SplitConfig(particles=1)


class TestNaive:
    def test_matches_dp_on_small_instance(self, pm1_model, make_degenerate):
        env = make_degenerate(pm1_model, 2)
        b = fixed_window(2, -1, 1)
        est = mc_survival(env, b, 2, 0.0, 10**5, seed=3)
        se = math.sqrt(0.5 * 0.5 / 10**5)
        assert abs(est.probability - 0.5) <= 3 * se

    def test_near_certain_event(self, gauss_model, make_degenerate):
        env = make_degenerate(gauss_model, 10)
        est = mc_survival(env, fixed_window(10, -1e6, 1e6), 10, 0.0, 200, seed=1)
        assert est.probability == 1.0
        assert est.log_prob == 0.0

    def test_determinism(self, eps_model):
        env = sample_environment(eps_model, 30, seed=5)
        b = fixed_window(30, -5, 5)
        a = mc_survival(env, b, 30, 0.0, 5000, seed=9)
        c = mc_survival(env, b, 30, 0.0, 5000, seed=9)
        assert a == c
        d = mc_survival(env, b, 30, 0.0, 5000, seed=10)
        assert d.log_prob != a.log_prob

    def test_zero_successes_flagged(self, pm1_model, make_degenerate):
        env = make_degenerate(pm1_model, 3)
        b = fixed_window(3, -0.5, 0.5)  # only the origin survives, +/-1 dies
        est = mc_survival(env, b, 3, 0.0, 200, seed=2)
        assert est.degenerate
        assert est.log_prob == -math.inf

    def test_reps_validated(self, pm1_model, make_degenerate):
        env = make_degenerate(pm1_model, 2)
        with pytest.raises(ValueError):
            mc_survival(env, fixed_window(2, -1, 1), 2, 0.0, 50, seed=1)

    def test_bootstrap_close_to_delta(self, pm1_model, make_degenerate):
        env = make_degenerate(pm1_model, 4)
        b = fixed_window(4, -2, 2)
        est = mc_survival(env, b, 4, 0.0, 20000, seed=6, bootstrap=True)
        assert est.stderr_bootstrap == pytest.approx(est.stderr, rel=0.3)


class TestSplit:
    def test_single_level_matches_naive_semantics(self, pm1_model, make_degenerate):
        # D=2 at n=4, alpha=0.3 gives T=4=n: one level, plain Monte Carlo
        n = 4
        env = make_degenerate(pm1_model, n)
        b = fixed_window(n, -1, 1, alpha=0.3)
        cfg = SplitConfig(d_blocks=2, particles=4000)
        assert cfg.level_ends(n, 0.3) == [4]
        est = split_survival(env, b, n, 0.0, cfg, seed=11)
        truth = math.exp(exact_survival(env, b, n, 0.0).log_prob)
        assert abs(est.probability - truth) <= 3 * est.stderr * est.probability

    def test_level_logs_sum_to_total(self, eps_model):
        n = 60
        env = sample_environment(eps_model, n, seed=13)
        b = fixed_window(n, -6, 6, alpha=0.45)
        cfg = SplitConfig(d_blocks=1, particles=2000)
        est = split_survival(env, b, n, 0.0, cfg, seed=13)
        assert est.level_fractions
        assert sum(math.log(f) for f in est.level_fractions) == est.log_prob

    def test_extinction_reported_with_level(self, pm1_model, make_degenerate):
        n = 8
        env = make_degenerate(pm1_model, n)
        lower = np.full(n + 1, -8.0)
        upper = np.full(n + 1, 8.0)
        lower[5] = 7.5  # unreachable from the origin in 5 steps
        b = BoundarySpec.explicit(0.45, lower, upper)
        cfg = SplitConfig(d_blocks=1, particles=500)
        est = split_survival(env, b, n, 0.0, cfg, seed=1)
        assert est.degenerate
        levels = cfg.level_ends(n, 0.45)
        dead_level = next(i for i, e in enumerate(levels) if e >= 5)
        assert est.extinct_level == dead_level

    def test_unbiased_at_probability_scale(self, pm1_model, make_degenerate):
        n = 12
        env = make_degenerate(pm1_model, n)
        b = fixed_window(n, -2, 2, alpha=0.45)
        truth = math.exp(exact_survival(env, b, n, 0.0).log_prob)
        cfg = SplitConfig(d_blocks=1, particles=400)
        probs = np.array(
            [split_survival(env, b, n, 0.0, cfg, seed=200 + r).probability for r in range(200)]
        )
        se = probs.std(ddof=1) / math.sqrt(len(probs))
        assert abs(probs.mean() - truth) <= 3 * se

    def test_variance_reduction_at_equal_budget(self, gauss_model, make_degenerate):
        n, alpha = 2000, 0.45
        env = make_degenerate(gauss_model, n)
        b = BoundarySpec.constant(alpha, -1.0, 1.0)
        naive = mc_survival(env, b, n, 0.0, 30000, seed=21)
        split = split_survival(env, b, n, 0.0, SplitConfig(d_blocks=1, particles=20000), seed=21)
        assert not naive.degenerate and not split.degenerate
        naive_var_budget = naive.stderr**2 * naive.steps_simulated
        split_var_budget = split.stderr**2 * split.steps_simulated
        assert split_var_budget < naive_var_budget

    def test_determinism(self, gauss_model, make_degenerate):
        n = 500
        env = make_degenerate(gauss_model, n)
        b = BoundarySpec.constant(0.45, -1.0, 1.0)
        cfg = SplitConfig(d_blocks=1, particles=1000)
        a = split_survival(env, b, n, 0.0, cfg, seed=4)
        c = split_survival(env, b, n, 0.0, cfg, seed=4)
        assert a == c
