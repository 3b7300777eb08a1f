"""Repeated first- and second-price auctions with budget-aware winners.

Items are sold one at a time. Bidder i bids ``v_ij / R_i`` with her reported
ROI and is only eligible while her remaining (true) budget covers what she
would pay.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit

from ..market import TOL, BidderType, Market, Outcome, check_types

FIRST_PRICE = "first-price"
SECOND_PRICE = "second-price"
_FORMS = {"fp": FIRST_PRICE, "first-price": FIRST_PRICE, "sp": SECOND_PRICE, "second-price": SECOND_PRICE}


@dataclass(frozen=True)
class SequentialAuctionConfig:
    form: str = FIRST_PRICE
    item_order: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.form not in _FORMS:
            raise ValueError(f"unknown auction form {self.form!r}")
        object.__setattr__(self, "form", _FORMS[self.form])
        if self.item_order is not None:
            object.__setattr__(self, "item_order", tuple(int(j) for j in self.item_order))

    @property
    def second_price(self) -> bool:
        return self.form == SECOND_PRICE

    def order(self, n_items: int) -> np.ndarray:
        if self.item_order is None:
            return np.arange(n_items)
        order = np.array(self.item_order, dtype=np.int64)
        if sorted(order.tolist()) != list(range(n_items)):
            raise ValueError("item_order must be a permutation of the items")
        return order


@njit(cache=True)
def _sell_item(bids_j, remaining, second_price, tol, skipped):
    """Winner index (-1 if unsold) and price for one item.

    ``skipped`` is caller-provided scratch space for the second-price cascade.
    """
    n = bids_j.shape[0]
    if not second_price:
        best = -1
        for i in range(n):
            if bids_j[i] <= remaining[i] + tol and (best < 0 or bids_j[i] > bids_j[best]):
                best = i
        if best < 0:
            return -1, 0.0
        return best, bids_j[best]
    for i in range(n):
        skipped[i] = False
    while True:
        top = -1
        for i in range(n):
            if not skipped[i] and (top < 0 or bids_j[i] > bids_j[top]):
                top = i
        if top < 0:
            return -1, 0.0
        price = 0.0
        for i in range(n):
            if i != top and not skipped[i] and bids_j[i] > price:
                price = bids_j[i]
        if price <= remaining[top] + tol:
            return top, price
        skipped[top] = True


@njit(cache=True)
def _simulate(bids_t, budgets, order, second_price, tol):
    """Run the item sequence; ``bids_t`` is item-major (m, n)."""
    m, n = bids_t.shape
    remaining = budgets.copy()
    skipped = np.zeros(n, dtype=np.bool_)
    winners = np.full(m, -1, dtype=np.int64)
    prices = np.zeros(m)
    for t in range(order.shape[0]):
        j = order[t]
        w, price = _sell_item(bids_t[j], remaining, second_price, tol, skipped)
        if w >= 0:
            winners[j] = w
            prices[j] = price
            remaining[w] -= price
    return winners, prices


@njit(cache=True)
def _scan_reports(values, bids, budgets, order, second_price, tol, bidder, candidates):
    """Bidder's (value, payment) for each candidate ROI, others' bids fixed."""
    n, m = bids.shape
    bids_t = np.ascontiguousarray(bids.T)
    remaining = np.empty(n)
    skipped = np.zeros(n, dtype=np.bool_)
    c = candidates.shape[0]
    vals = np.zeros(c)
    pays = np.zeros(c)
    for q in range(c):
        for j in range(m):
            bids_t[j, bidder] = values[bidder, j] / candidates[q]
        for i in range(n):
            remaining[i] = budgets[i]
        for t in range(order.shape[0]):
            j = order[t]
            w, price = _sell_item(bids_t[j], remaining, second_price, tol, skipped)
            if w >= 0:
                remaining[w] -= price
                if w == bidder:
                    vals[q] += values[bidder, j]
                    pays[q] += price
    return vals, pays


def _outcome(market: Market, winners: np.ndarray, prices: np.ndarray) -> Outcome:
    n, m = market.values.shape
    alloc = np.zeros((n, m))
    pay = np.zeros(n)
    sold = np.flatnonzero(winners >= 0)
    alloc[winners[sold], sold] = 1.0
    np.add.at(pay, winners[sold], prices[sold])
    return Outcome.from_allocation(market, alloc, pay)


def sequential_auction(market: Market, reported: Sequence[BidderType],
                       config: SequentialAuctionConfig = SequentialAuctionConfig()) -> Outcome:
    """Run one pass over the items.

    First price: the highest bidder who can afford her own bid wins and pays
    it. Second price: the highest bidder pays the highest competing bid; if
    she cannot afford it she is skipped for this item and the next one is
    priced against the bidders not yet skipped. Unaffordable items go unsold.
    """
    budgets, rois = check_types(reported, market)
    bids = market.values / rois[:, None]
    bids_t = np.ascontiguousarray(bids.T)
    winners, prices = _simulate(bids_t, budgets, config.order(market.n_items), config.second_price, TOL)
    return _outcome(market, winners, prices)


class SequentialAuction:
    """Callable wrapper ``mechanism(market, reported) -> Outcome``."""

    def __init__(self, form: str = FIRST_PRICE, item_order=None):
        self.config = SequentialAuctionConfig(form, item_order)

    def __call__(self, market: Market, reported: Sequence[BidderType]) -> Outcome:
        return sequential_auction(market, reported, self.config)

    def __repr__(self):
        return f"SequentialAuction(form={self.config.form!r})"
