"""Shared fixture builders for the test suite."""
import math

import numpy as np

from autobid.market import BidderType, Market
from autobid.rank import ExponentialRankScores

# Two-bidder, two-item markets: (values, types).
EXAMPLE_1 = ([[4.0, 4.0], [1.0, 1.0]], [BidderType(3.0, 2.0), BidderType(6.0, 1.5)])
EXAMPLE_2 = ([[4.0, 8.0], [4.0, 4.0]], [BidderType(3.0, 1.0), BidderType(6.0, 1.5)])
EXAMPLE_3 = ([[4.0, 3.0], [1.0, 4.0]], [BidderType(6.0, 2.0), BidderType(6.0, 2.0)])


def example(which):
    values, types = which
    return Market(values), list(types)


def engineered(r, v, beta=1.0):
    """Bidder 0 faces win thresholds exactly ``r`` on items with values ``v``.

    A single competitor (bidder 1, ROI 1) has its rank scores chosen so
    that the price ratio on item j is ``exp(-beta * r_j)``; ``r_j = inf``
    gives the competitor a zero score.
    """
    r = np.asarray(r, dtype=float)
    v = np.asarray(v, dtype=float)
    m = r.size
    alpha = np.ones((2, m))
    alpha[1] = np.where(np.isinf(r), 0.0, v * np.exp(-beta * np.where(np.isinf(r), 0.0, r)) * math.exp(beta))
    market = Market(np.vstack([v, np.ones(m)]))
    return market, ExponentialRankScores(alpha, beta), BidderType(1e6, 1.0)


def random_market(rng, n, m):
    return Market(rng.uniform(1.0, 4.0, size=(n, m)))


def random_types(rng, n, b=(0.0, 10.0), r=(0.25, 5.0)):
    return [BidderType(float(x), float(y)) for x, y in zip(rng.uniform(*b, n), rng.uniform(*r, n))]
