import math

import numpy as np
import pytest

from oracles import em_tube_survival
from smalldev._kernels import cn_sweep
from smalldev.rng import TAG_ORACLE, stream
from smalldev.tube import (
    GridTooCoarse,
    OutOfInterval,
    TubeProblem,
    WPath,
    gamma_estimate,
    gamma_properties_check,
    stable_w_step,
    tube_survival_fixed,
    tube_survival_quenched,
    xbar_tail_diagnostic,
)

# frozen Euler-Maruyama oracle: carrier path from stream(424242, oracle, 0)
# at ds=0.001, t=2, beta=1, tube [-1,1], start 0; 1e6 paths, dt=1e-3, seed 99
EM_ORACLE_P = 0.012275
EM_ORACLE_SE = 0.0001101105098298977
EM_W_SEED = 424242


class TestSeries:
    def test_time_zero(self):
        assert tube_survival_fixed(0.0, 1.0, 0.5, 0.0) == 1.0

    def test_started_on_wall(self):
        assert tube_survival_fixed(0.0, 1.0, 0.0, 1.0) == 0.0
        assert tube_survival_fixed(0.0, 1.0, 1.0, 1.0) == 0.0

    def test_outside_raises(self):
        with pytest.raises(OutOfInterval):
            tube_survival_fixed(0.0, 1.0, 1.5, 1.0)

    def test_reference_value(self):
        assert tube_survival_fixed(0.0, 1.0, 0.5, 1.0) == pytest.approx(0.009157, abs=1e-6)

    def test_leading_mode_dominates(self):
        val = tube_survival_fixed(0.0, 1.0, 0.5, 2.0)
        lead = 4.0 / math.pi * math.exp(-math.pi**2)
        assert val == pytest.approx(lead, rel=1e-8)


def zero_problem(t=1.0, start=0.5, exit=None):
    return TubeProblem(a=0.0, b=1.0, beta=0.0, w=WPath.zeroed(t, 0.005), start=start, exit=exit)


class TestQuenchedSolver:
    def test_beta_zero_matches_series(self):
        series = tube_survival_fixed(0.0, 1.0, 0.5, 1.0)
        prob, xbar = tube_survival_quenched(zero_problem())
        assert prob == pytest.approx(series, rel=1e-3)
        assert xbar == pytest.approx(-math.log(series), abs=1e-3)

    def test_zero_path_any_beta_matches_series(self):
        series = tube_survival_fixed(0.0, 1.0, 0.5, 1.0)
        problem = TubeProblem(a=0.0, b=1.0, beta=1.0, w=WPath.zeroed(1.0, 0.005), start=0.5)
        prob, _ = tube_survival_quenched(problem)
        assert prob == pytest.approx(series, rel=1e-3)

    def test_refinement_order(self):
        series = tube_survival_fixed(0.0, 1.0, 0.5, 1.0)
        errs = []
        for nx in (200, 400):
            dx = 1.0 / nx
            prob, _ = tube_survival_quenched(zero_problem(), (dx, dx * dx))
            errs.append(abs(prob - series) / series)
        order = math.log(errs[0] / errs[1]) / math.log(2.0)
        assert order >= 1.8

    def test_grid_validation(self):
        with pytest.raises(GridTooCoarse):
            tube_survival_quenched(zero_problem(), (0.05, 0.0025))
        with pytest.raises(GridTooCoarse):
            tube_survival_quenched(zero_problem(), (0.005, 0.005))

    def test_brownian_scaling(self):
        # tube [0,2] with time 4 equals tube [0,1] with time 1
        base, _ = tube_survival_quenched(zero_problem())
        scaled_problem = TubeProblem(
            a=0.0, b=2.0, beta=0.0, w=WPath.zeroed(4.0, 0.005), start=1.0
        )
        scaled, _ = tube_survival_quenched(scaled_problem, (2.0 / 200, (2.0 / 200) ** 2))
        assert scaled == pytest.approx(base, rel=2e-3)

    def test_mass_conservation_without_absorption(self):
        # wide domain, compact bump: walls never see mass, total mass stays put
        nx = 400
        dx = 16.0 / nx
        xs = -8.0 + dx * np.arange(1, nx)
        u = np.exp(-0.5 * (xs / 0.25) ** 2)
        mass0 = u.sum() * dx
        drift = np.zeros(int(1.0 / (dx * dx * 0.5)))
        ds = 1.0 / len(drift)
        status, log_acc = cn_sweep(u, drift, dx, ds)
        assert status == 0
        mass1 = u.sum() * dx * math.exp(log_acc)
        assert abs(mass1 - mass0) <= 1e-10 * mass0

    def test_against_em_oracle(self):
        rng = stream(EM_W_SEED, TAG_ORACLE, 0)
        w = WPath.sample(2.0, 0.001, rng)
        problem = TubeProblem(a=-1.0, b=1.0, beta=1.0, w=w, start=0.0)
        prob, _ = tube_survival_quenched(problem)
        assert abs(prob - EM_ORACLE_P) <= 3.0 * EM_ORACLE_SE

    @pytest.mark.slow
    def test_em_oracle_rederivation(self):
        rng = stream(EM_W_SEED, TAG_ORACLE, 0)
        w = WPath.sample(2.0, 0.001, rng)
        p, se = em_tube_survival(w.values, w.ds, 1.0, -1.0, 1.0, 0.0, 2.0, 10**6, 1e-3, seed=99)
        assert p == pytest.approx(EM_ORACLE_P, abs=1e-12)
        assert se == pytest.approx(EM_ORACLE_SE, rel=1e-6)

    def test_exit_window_reduces_survival(self):
        p_all, _ = tube_survival_quenched(zero_problem())
        p_exit, _ = tube_survival_quenched(zero_problem(exit=(0.1, 0.9)))
        assert p_exit < p_all

    def test_inf_over_entry_below_point_start(self):
        p_point, _ = tube_survival_quenched(zero_problem(start=0.5, exit=(0.1, 0.9)))
        prob_inf, _ = tube_survival_quenched(
            TubeProblem(a=0.0, b=1.0, beta=0.0, w=WPath.zeroed(1.0, 0.005),
                        start=None, entry=(0.3, 0.7), exit=(0.1, 0.9))
        )
        assert prob_inf <= p_point

    def test_nesting_validation(self):
        with pytest.raises(ValueError):
            TubeProblem(a=0.0, b=1.0, beta=0.0, w=WPath.zeroed(1.0, 0.01), entry=(-0.1, 0.5))
        with pytest.raises(OutOfInterval):
            TubeProblem(a=0.0, b=1.0, beta=0.0, w=WPath.zeroed(1.0, 0.01), start=1.4)


class TestWPath:
    def test_sampling_shape(self):
        rng = stream(1, TAG_ORACLE, 1)
        w = WPath.sample(2.0, 0.001, rng)
        assert w.values[0] == 0.0
        assert len(w.values) % 2 == 1
        assert w.t == pytest.approx(w.ds * (len(w.values) - 1))

    def test_increment_variance(self):
        rng = stream(2, TAG_ORACLE, 2)
        w = WPath.sample(50.0, 0.01, rng)
        incs = np.diff(w.values)
        assert incs.var() == pytest.approx(w.ds, rel=0.1)

    def test_coarsening_halves_resolution(self):
        rng = stream(3, TAG_ORACLE, 3)
        w = WPath.sample(1.0, 0.001, rng)
        c = w.coarsened()
        assert c.ds == pytest.approx(2 * w.ds)
        np.testing.assert_array_equal(c.values, w.values[::2])

    def test_stability_floor(self):
        assert stable_w_step(0.001, 0.0, 0.005) == 0.001
        assert stable_w_step(0.001, 2.0, 0.005) > 0.002


class TestGammaEstimate:
    def test_beta_zero_recovers_half_pi_squared(self):
        est = gamma_estimate(0.0, [2, 3, 4], 1, seed=1)
        assert est.gamma_hat == pytest.approx(math.pi**2 / 2.0, rel=1e-3)
        assert est.n_w == 1

    def test_geometry_invariance_of_gamma(self):
        # gamma is reported after multiplying by (b-a)^2
        wide = gamma_estimate(0.0, [2, 3, 4], 1, a=0.0, b=2.0,
                              grid=(2.0 / 200, (2.0 / 200) ** 2), seed=1)
        assert wide.gamma_hat == pytest.approx(math.pi**2 / 2.0, rel=5e-3)

    def test_xbars_nonnegative(self):
        est = gamma_estimate(0.0, [2, 3, 4], 1, seed=2)
        assert all((x >= 0).all() for x in est.xbars)

    def test_validation(self):
        with pytest.raises(ValueError):
            gamma_estimate(0.0, [2, 3], 1, seed=1)
        with pytest.raises(ValueError):
            gamma_estimate(1.0, [2, 3, 4], 10, seed=1)

    def test_properties_check_logic(self):
        from smalldev.tube import GammaEstimate

        def fake(beta, gamma, ci=0.05):
            return GammaEstimate(
                beta=beta,
                horizons=(2.0, 3.0, 4.0),
                xbars=(np.zeros(1),) * 3,
                mean_xbar=np.zeros(3),
                var_xbar=np.zeros(3),
                gamma_hat=gamma,
                ci_halfwidth=ci,
                n_w=50,
            )

        g0 = math.pi**2 / 2.0
        exact = [fake(0.0, g0), fake(1.0, 2.1 * g0), fake(-1.0, 2.1 * g0),
                 fake(2.0, 6.0 * g0), fake(-2.0, 6.0 * g0)]
        rep = gamma_properties_check(exact)
        assert rep.all_pass
        assert rep.evenness_pairs and rep.convexity_triples

        bad_even = [fake(0.0, g0), fake(1.0, 2.5 * g0), fake(-1.0, 2.1 * g0)]
        assert not gamma_properties_check(bad_even).evenness

        below_bound = [fake(0.0, 4.0)]  # gamma(0) must be >= pi^2/2 within ci
        assert not gamma_properties_check(below_bound).lower_bound


class TestTailDiagnostic:
    def test_small_run_structure(self):
        # wider tube keeps the mandated grid cheap for a unit test
        rep = xbar_tail_diagnostic(
            0.5, 1.0, 500, [0.0, 0.5], seed=3, a=-1.0, b=1.0, grid=(0.01, 1e-4)
        )
        assert rep.mgf[0] == 1.0
        assert np.isfinite(rep.mgf[1])
        assert rep.xbars.shape == (500,)
        assert rep.tail_slope < 0.0

    def test_requires_enough_samples(self):
        with pytest.raises(ValueError):
            xbar_tail_diagnostic(1.0, 2.0, 100, [0.0], seed=1)
