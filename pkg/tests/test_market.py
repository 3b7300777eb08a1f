import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from autobid.extended import NEG_INF, POS_INF
from autobid.market import (
    BidderType,
    Market,
    Outcome,
    bidder_utility,
    compute_metrics,
    fairness,
    liquid_welfare,
    load_market,
    market_from_dict,
    market_to_dict,
    metrics_to_csv,
    realized_roi,
    revenue,
)


def outcome_1x1(value, payment):
    m = Market([[value]])
    return m, Outcome.from_allocation(m, [[1.0]], [payment])


class TestTypes:
    def test_bidder_type_bounds(self):
        BidderType(0.0, 1.0)
        with pytest.raises(ValueError):
            BidderType(-1.0, 1.0)
        with pytest.raises(ValueError):
            BidderType(1.0, 0.0)
        with pytest.raises(ValueError):
            BidderType(math.inf, 1.0)

    def test_market_values_positive(self):
        with pytest.raises(ValueError):
            Market([[1.0, 0.0]])
        with pytest.raises(ValueError):
            Market([1.0, 2.0])
        m = Market([[1.0, 2.0], [3.0, 4.0]])
        assert (m.n_bidders, m.n_items) == (2, 2)
        with pytest.raises(ValueError):
            m.values[0, 0] = 5.0

    def test_outcome_rejects_overallocation(self):
        m = Market([[1.0], [1.0]])
        with pytest.raises(AssertionError):
            Outcome.from_allocation(m, [[0.7], [0.7]], [0.0, 0.0])
        with pytest.raises(ValueError):
            Outcome.from_allocation(m, [[0.5], [0.5]], [-1.0, 0.0])

    def test_outcome_values_and_unsold(self):
        m = Market([[2.0, 4.0], [3.0, 1.0]])
        o = Outcome.from_allocation(m, [[1.0, 0.25], [0.0, 0.5]], [1.0, 0.1])
        np.testing.assert_allclose(o.values, [3.0, 0.5], rtol=1e-12)
        np.testing.assert_allclose(o.unsold_mass, [0.0, 0.25])


class TestRealizedRoi:
    def test_examples(self):
        assert realized_roi(8, 2) == 4
        assert realized_roi(5, 0) == POS_INF
        assert realized_roi(7, 2.5).value == pytest.approx(2.8, abs=1e-12)


class TestUtility:
    t = BidderType(3.0, 2.0)

    def test_examples(self):
        assert bidder_utility(self.t, 4, 2) == 4
        assert bidder_utility(self.t, 4, 3.5) == NEG_INF
        assert bidder_utility(self.t, 4, 2.5) == NEG_INF

    def test_exact_truthful_payment_accepted(self):
        t = BidderType(10.0, 3.0)
        assert bidder_utility(t, 7.0, 7.0 / 3.0).is_finite

    @given(st.floats(0, 50), st.floats(0, 50), st.floats(0, 20))
    def test_monotone_in_value(self, v1, v2, p):
        lo, hi = sorted((v1, v2))
        u_lo, u_hi = bidder_utility(self.t, lo, p), bidder_utility(self.t, hi, p)
        if u_lo.is_finite:
            assert u_hi.is_finite and u_hi >= u_lo


class TestMetrics:
    def test_revenue(self):
        m = Market([[1.0, 1.0], [1.0, 1.0]])
        o = Outcome.from_allocation(m, np.zeros((2, 2)), [2.0, 2 / 3])
        assert revenue(o) == pytest.approx(2 + 2 / 3, abs=1e-12)
        assert revenue(Outcome.from_allocation(m, np.zeros((2, 2)), [0.0, 0.0])) == 0.0
        assert revenue(Outcome.from_allocation(m, np.zeros((2, 2)), [3.0, 1 / 3])) == pytest.approx(10 / 3, abs=1e-12)

    def test_liquid_welfare(self):
        t = [BidderType(3.0, 2.0)]
        m, o = outcome_1x1(4.0, 2.0)
        assert liquid_welfare(m, t, o) == 2.0
        m, o = outcome_1x1(8.0, 2.0)
        assert liquid_welfare(m, t, o) == 3.0
        m, o = outcome_1x1(8.0, 3.5)
        assert liquid_welfare(m, t, o) == 0.0

    def test_fairness(self):
        m = Market([[4.0, 1.0], [1.0, 9.0]])
        types = [BidderType(3.0, 2.0), BidderType(3.0, 1.0)]
        o = Outcome.from_allocation(m, [[1.0, 0.0], [0.0, 1.0]], [2.0, 3.0])
        assert fairness(m, types, o) == 2.0
        o = Outcome.from_allocation(m, [[1.0, 0.0], [0.0, 0.0]], [2.0, 0.0])
        assert fairness(m, types, o) == 0.0
        m, o = outcome_1x1(6.0, 1.0)
        assert fairness(m, [BidderType(1.0, 3.0)], o) == 1.0

    def test_compute_metrics_and_csv(self):
        m, o = outcome_1x1(4.0, 2.0)
        rep = compute_metrics(m, [BidderType(3.0, 2.0)], o)
        assert rep.realized_roi == (2.0,)
        text = metrics_to_csv([("dsic", 0, rep)])
        assert text.splitlines() == ["mechanism,run,revenue,liquid_welfare,fairness", "dsic,0,2.0,2.0,2.0"]
        assert rep.to_dict()["utilities"] == [4.0]


def test_market_json_roundtrip(tmp_path):
    data = {"values": [[4.0, 4.0], [1.0, 1.0]], "types": [{"budget": 3, "roi": 2}, {"budget": 5, "roi": 1.5}]}
    m, types = market_from_dict(data)
    assert types[1] == BidderType(5.0, 1.5)
    path = tmp_path / "m.json"
    path.write_text(json.dumps(market_to_dict(m, types)))
    m2, t2 = load_market(path)
    np.testing.assert_array_equal(m2.values, m.values)
    assert t2 == types
    with pytest.raises(ValueError):
        market_from_dict({"values": [[1.0]], "types": [{"budget": 1, "roi": 1}] * 2})
