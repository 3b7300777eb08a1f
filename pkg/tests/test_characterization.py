import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from autobid.baselines import SequentialAuction
from autobid.characterization import (
    ThresholdCurve,
    ValueGrid,
    brute_force_dsic_check,
    check_feasibility_conditions,
    closed_form_curve,
    closed_form_g,
    mechanism_value_grid,
    sample_value_grid,
    threshold_from_values,
    value_from_g,
)
from autobid.market import BidderType
from autobid.rank import ExponentialRankScores, TruthfulAuction

from helpers import EXAMPLE_1, EXAMPLE_3, example, random_market, random_types

ITEMS = [(2.0, 4.0), (1.0, 6.0)]

item_lists = st.lists(st.floats(0.2, 5.0), min_size=1, max_size=6, unique=True).flatmap(
    lambda rs: st.lists(st.floats(0.5, 4.0), min_size=len(rs), max_size=len(rs)).map(
        lambda vs: list(zip(sorted(rs, reverse=True), vs))))


def brute_value(curve, budget, roi, n=200_001):
    """Grid-search reference for the sup in value_from_g."""
    if roi * budget <= curve.g(budget) + 1e-12:
        return curve.g(budget)
    bs = np.linspace(0, budget, n)[1:]
    gs = np.interp(bs, curve.budgets, curve.g_values)
    ok = gs >= roi * bs
    return float(gs[ok].max()) if ok.any() else 0.0


class TestClosedForm:
    @pytest.mark.parametrize("budget, g", [(1.0, 2.0), (3.0, 4.0), (20.0, 10.0), (0.0, 0.0), (5.0, 5.0)])
    def test_examples(self, budget, g):
        assert closed_form_g(ITEMS, budget) == pytest.approx(g, abs=1e-12)

    def test_empty_and_unsorted(self):
        assert closed_form_g([], 3.0) == 0.0
        with pytest.raises(ValueError):
            closed_form_g([(1.0, 1.0), (2.0, 1.0)], 1.0)

    def test_ulp_close_thresholds(self):
        # v / r0 == v / r1 in floating point for these adjacent thresholds.
        r1 = 3.690995198912184
        v = 1.4052895150672335
        items = [(float(np.nextafter(r1, 10.0)), v), (r1, 1.0)]
        curve = closed_form_curve(items)
        assert np.all(np.diff(curve.budgets) > 0)
        for b in (0.1, v / r1, 0.5, 1.0, 3.0):
            assert curve.g(b) == pytest.approx(closed_form_g(items, b), abs=1e-12)

    @given(item_lists, st.floats(0, 30), st.floats(0, 30))
    def test_curve_matches_piecewise_and_is_monotone(self, items, b1, b2):
        curve = closed_form_curve(items)
        lo, hi = sorted((b1, b2))
        assert curve.g(lo) == pytest.approx(closed_form_g(items, lo), abs=1e-9)
        assert closed_form_g(items, lo) <= closed_form_g(items, hi) + 1e-12
        assert curve.g(0.0) == 0.0


class TestThresholdCurve:
    def test_validation(self):
        with pytest.raises(ValueError):
            ThresholdCurve([1.0, 2.0], [0.0, 1.0])
        with pytest.raises(ValueError):
            ThresholdCurve([0.0, 1.0], [0.0, -1.0])
        with pytest.raises(ValueError):
            ThresholdCurve([0.0, 0.0], [0.0, 1.0])

    def test_thr(self):
        c = ThresholdCurve.from_points([(2.0, 4.0), (0.0, 0.0)])
        assert c.thr(0.0) == math.inf
        assert c.thr(1.0) == 2.0
        assert c.thr(4.0) == 1.0


class TestValueFromG:
    identity = ThresholdCurve([0.0, 100.0], [0.0, 100.0])

    def test_examples(self):
        assert value_from_g(self.identity, 5.0, 0.5) == 5.0
        assert value_from_g(self.identity, 5.0, 2.0) == 0.0
        assert value_from_g(closed_form_curve(ITEMS), 5.0, 1.5) == pytest.approx(4.0, abs=1e-12)

    def test_against_grid_sup(self):
        curve = closed_form_curve(ITEMS)
        for b, r in [(5.0, 1.5), (7.0, 1.1), (12.0, 0.9), (1.0, 3.0), (9.9, 1.01)]:
            assert value_from_g(curve, b, r) == pytest.approx(brute_value(curve, b, r), abs=1e-3)

    @settings(max_examples=50, deadline=None)
    @given(item_lists)
    def test_monotone_on_grid(self, items):
        curve = closed_form_curve(items)
        grid = sample_value_grid(lambda b, r: value_from_g(curve, b, r),
                                 np.linspace(0, 15, 16), np.linspace(0.25, 5, 16))
        assert np.all(np.diff(grid.values, axis=0) >= -1e-9)
        assert np.all(np.diff(grid.values, axis=1) <= 1e-9)
        assert check_feasibility_conditions(grid).passed

    @settings(max_examples=40, deadline=None)
    @given(item_lists)
    def test_threshold_round_trip(self, items):
        curve = closed_form_curve(items)
        budgets = np.linspace(0.5, 15, 30)
        rois = np.linspace(0.01, 6, 2001)
        grid = sample_value_grid(lambda b, r: value_from_g(curve, b, r), budgets, rois)
        step = rois[1] - rois[0]
        for b in budgets:
            true_thr = curve.thr(b)
            if true_thr > rois[-1]:
                continue
            assert threshold_from_values(grid, b) == pytest.approx(true_thr, abs=step + 1e-9)


class TestThresholdFromValues:
    rois = np.linspace(0.01, 5, 500)

    def test_examples(self):
        budgets = np.array([0.0, 3.0])
        zero = ValueGrid(budgets, self.rois, np.zeros((2, self.rois.size)))
        assert threshold_from_values(zero, 3.0) == 0.0
        assert threshold_from_values(zero, 0.0) == math.inf
        four = ValueGrid(budgets, self.rois, np.full((2, self.rois.size), 4.0))
        assert threshold_from_values(four, 3.0) == pytest.approx(4 / 3, abs=0.01)

    def test_off_grid_budget(self):
        grid = ValueGrid([0.0, 1.0], [1.0, 2.0], np.zeros((2, 2)))
        with pytest.raises(ValueError):
            threshold_from_values(grid, 0.5)


class TestFeasibility:
    def test_zero_grid_passes(self):
        assert check_feasibility_conditions(ValueGrid([0, 1, 2], [1, 2, 3], np.zeros((3, 3)))).passed

    def test_rejects_tiny_grid(self):
        with pytest.raises(ValueError):
            check_feasibility_conditions(ValueGrid([0.0], [1.0, 2.0], np.zeros((1, 2))))

    def test_flags_monotonicity(self):
        grid = ValueGrid([1.0, 2.0], [1.0, 2.0], [[1.0, 1.0], [0.5, 0.5]])
        rep = check_feasibility_conditions(grid)
        assert not rep.passed and rep.by_condition("monotone-budget")
        assert rep.worst()["monotone-budget"] == pytest.approx(0.5)
        assert rep.to_dict()["passed"] is False

    def test_truthful_mechanism_grid_passes(self):
        rng = np.random.default_rng(3)
        market = random_market(rng, 2, 4)
        types = random_types(rng, 2)
        mech = TruthfulAuction(ExponentialRankScores(rng.uniform(0.5, 1.5, (2, 4)), 0.8))
        grid = mechanism_value_grid(mech, market, types, 0, np.linspace(0, 10, 41), np.linspace(0.25, 5, 41))
        rep = check_feasibility_conditions(grid)
        assert rep.passed, rep.worst()

    def test_first_price_grid_fails(self):
        market, types = example(EXAMPLE_1)
        grid = mechanism_value_grid(SequentialAuction("fp"), market, types, 0,
                                    np.linspace(0, 10, 41), np.linspace(0.25, 5, 41))
        assert not check_feasibility_conditions(grid).passed


class TestBruteForce:
    def test_first_price_example(self):
        market, types = example(EXAMPLE_1)
        rep = brute_force_dsic_check(SequentialAuction("fp"), market, types, 0, [3.0], [2.0], [3.0], [2.0, 4.0])
        assert [v.witness for v in rep.by_condition("DSIC")] == [((3.0, 2.0), (3.0, 4.0))]
        assert rep.by_condition("DSIC")[0].magnitude == pytest.approx(4.0)

    def test_second_price_example(self):
        market, types = example(EXAMPLE_3)
        rep = brute_force_dsic_check(SequentialAuction("sp"), market, types, 0, [6.0], [2.0], [6.0], [1.2, 2.0])
        (viol,) = rep.by_condition("DSIC")
        assert viol.witness == ((6.0, 2.0), (6.0, 1.2))
        assert viol.magnitude == pytest.approx(3.0)

    def test_truthful_mechanism_passes(self):
        rng = np.random.default_rng(11)
        market = random_market(rng, 3, 4)
        types = random_types(rng, 3)
        mech = TruthfulAuction(ExponentialRankScores(rng.uniform(0.5, 1.5, (3, 4)), 0.5))
        rep = brute_force_dsic_check(mech, market, types, 1, np.linspace(0, 10, 5), np.linspace(0.25, 5, 5),
                                     np.linspace(0, 10, 15), np.linspace(0.25, 5, 15))
        assert rep.passed, rep.worst()
