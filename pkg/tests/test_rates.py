import math

import numpy as np
import pytest

from oracles import simpson_reference
from smalldev.boundaries import CrossingBoundaries
from smalldev.rates import (
    BadWindow,
    GammaTable,
    TableGap,
    c_gh,
    mogulskii_rate,
    quenched_vs_annealed_gap,
    rwre_rate,
    shao_rate,
)

PI2 = math.pi**2


class TestClosedForms:
    def test_classical_rate(self):
        assert mogulskii_rate(1.0, -1.0, 1.0) == pytest.approx(-PI2 / 8.0, rel=1e-14)

    def test_linear_in_variance(self):
        assert mogulskii_rate(4.0, -1.0, 1.0) == pytest.approx(4 * mogulskii_rate(1.0, -1.0, 1.0))

    def test_width_scaling(self):
        assert mogulskii_rate(1.0, -2.0, 2.0) == pytest.approx(-PI2 / 32.0, rel=1e-14)

    def test_bad_window(self):
        with pytest.raises(BadWindow):
            mogulskii_rate(1.0, 0.5, 1.0)

    def test_shao_values(self):
        assert shao_rate(1.0, 1.0) == pytest.approx(-PI2 / 8.0, rel=1e-14)
        assert shao_rate(2.0, 1.0) == pytest.approx(-PI2 / 4.0, rel=1e-14)
        assert shao_rate(1.0, 1.0) == pytest.approx(mogulskii_rate(1.0, -1.0, 1.0))

    def test_dilation_scaling(self):
        # every prediction scales by s^-2 under window dilation
        table = GammaTable.exact_at_zero()
        for s in (2.0, 5.0):
            assert rwre_rate(0.0, 1.0, -s, s, table).exponent == pytest.approx(
                rwre_rate(0.0, 1.0, -1.0, 1.0, table).exponent / s**2
            )
            assert shao_rate(1.0, s) == pytest.approx(shao_rate(1.0, 1.0) / s**2)


class TestGammaTable:
    def table(self):
        return GammaTable.from_rows(
            [(0.0, PI2 / 2, 0.0), (1.0, 1.05 * PI2, 0.3), (2.0, 3.4 * PI2, 1.2)]
        )

    def test_node_lookup(self):
        gam, ci = self.table().lookup(1.0)
        assert gam == pytest.approx(1.05 * PI2)
        assert ci == pytest.approx(0.3)

    def test_interpolation_widens_ci(self):
        gam, ci = self.table().lookup(0.5)
        lin = 0.5 * (PI2 / 2 + 1.05 * PI2)
        assert gam == pytest.approx(lin)
        assert ci > 0.15  # linear part plus the spread widening

    def test_gap_raises(self):
        with pytest.raises(TableGap):
            self.table().lookup(2.5)
        with pytest.raises(TableGap):
            self.table().lookup(-0.5)

    def test_rwre_reduces_to_classical_at_zero(self):
        pred = rwre_rate(0.0, 1.3, -1.0, 1.0, GammaTable.exact_at_zero())
        assert pred.exponent == pytest.approx(mogulskii_rate(1.3, -1.0, 1.0), rel=1e-14)

    def test_rwre_respects_lower_bound(self):
        pred = rwre_rate(1.0, 1.0, -1.0, 1.0, self.table())
        assert pred.exponent <= -PI2 * 2.0 / 8.0 + 1e-12

    def test_monotone_in_environment_variance(self):
        table = self.table()
        exps = [rwre_rate(b * b, 1.0, -1.0, 1.0, table).exponent for b in (0.0, 0.5, 1.0, 2.0)]
        assert all(x >= y - 1e-12 for x, y in zip(exps, exps[1:]))

    def test_rwre_example_value(self):
        pred = rwre_rate(1.0, 1.0, -1.0, 1.0, self.table())
        assert pred.exponent == pytest.approx(-1.05 * PI2 / 4.0)


class TestBoundaryFunctional:
    def test_constant_boundaries(self):
        assert c_gh(lambda s: -1.0, lambda s: 1.0) == pytest.approx(0.25, abs=1e-12)

    def test_growing_channel(self):
        val = c_gh(lambda s: 0.0, lambda s: 1.0 + s)
        assert val == pytest.approx(0.5, abs=1e-8)

    def test_array_inputs_against_reference(self):
        s = np.linspace(0.0, 1.0, 201)
        g = np.zeros(201)
        h = 1.0 + s
        expected = simpson_reference(1.0 / (h - g) ** 2)
        assert c_gh(g, h) == pytest.approx(expected, rel=1e-14)

    def test_refinement_converges(self):
        s1 = np.linspace(0.0, 1.0, 101)
        s2 = np.linspace(0.0, 1.0, 201)
        v1 = c_gh(np.zeros(101), 1.0 + s1)
        v2 = c_gh(np.zeros(201), 1.0 + s2)
        assert abs(v1 - v2) < 1e-8

    def test_crossing_rejected(self):
        with pytest.raises(CrossingBoundaries):
            c_gh(lambda s: s, lambda s: 1.0 - s)  # touch at s = 0.5

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            c_gh(np.zeros(50), np.ones(50))
        with pytest.raises(ValueError):
            c_gh(np.zeros(102), np.ones(102))

    def test_constant_grid_equals_exact(self):
        # quadrature of a constant has no discretization error at all
        assert c_gh(np.full(101, -1.0), np.full(101, 3.0)) == pytest.approx(1.0 / 16.0, abs=1e-15)


class TestGapReport:
    def test_degenerate_environment_gap_zero(self):
        rec, cen, gap = quenched_vs_annealed_gap(0.0, 1.0, 1.0, GammaTable.exact_at_zero())
        assert gap == pytest.approx(0.0, abs=1e-12)
        assert rec == pytest.approx(cen)

    def test_active_environment_gap_negative(self):
        table = GammaTable.from_rows([(0.0, PI2 / 2, 0.0), (1.0, 1.1 * PI2, 0.2)])
        rec, cen, gap = quenched_vs_annealed_gap(1.0, 1.0, 1.0, table)
        assert gap <= -PI2 / 8.0 + 1e-12

    def test_gap_negative_across_table(self):
        table = GammaTable.from_rows(
            [(0.0, PI2 / 2, 0.0), (0.5, 0.63 * PI2, 0.1), (1.0, 1.07 * PI2, 0.2), (2.0, 3.37 * PI2, 0.6)]
        )
        for beta in (0.5, 1.0, 2.0):
            gam, _ = table.lookup(beta)
            if gam >= PI2 * (1 + beta**2) / 2.0:  # entries satisfying the bound
                _, _, gap = quenched_vs_annealed_gap(beta**2, 1.0, 1.0, table)
                assert gap < 0.0