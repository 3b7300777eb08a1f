"""Best-response ROI misreporting in repeated first/second-price auctions."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..market import TOL, BidderType, Market, Outcome, check_types
from .sequential import SequentialAuctionConfig, _scan_reports, sequential_auction

EPS = 1e-6


@dataclass(frozen=True)
class DynamicsState:
    """Reported ROIs after ``round`` full passes; budgets stay truthful."""

    reported_rois: np.ndarray
    round: int
    history: Outcome
    converged: bool

    def reports(self, true_types: Sequence[BidderType]) -> list[BidderType]:
        return [BidderType(t.budget, float(r)) for t, r in zip(true_types, self.reported_rois)]


def candidate_rois(bidder: int, market: Market, reported: Sequence[BidderType], true_roi: float,
                   eps: float = EPS) -> np.ndarray:
    """Reports at which the bidder's rank against some competitor flips, +-eps, plus the truth.

    Bidder i outranks bidder k on item j exactly when ``R < v_ij / b_kj``.
    """
    _, rois = check_types(reported, market)
    others = np.delete(np.arange(market.n_bidders), bidder)
    comp_bids = market.values[others] / rois[others, None]
    thresholds = (market.values[bidder][None, :] / comp_bids).ravel()
    cands = np.concatenate([thresholds - eps, thresholds + eps, [true_roi]])
    return np.unique(cands[cands > 0])


def _evaluate(bidder, market, reported, config, cands):
    budgets, rois = check_types(reported, market)
    bids = market.values / rois[:, None]
    return _scan_reports(market.values, bids, budgets, config.order(market.n_items),
                         config.second_price, TOL, bidder, np.ascontiguousarray(cands))


def best_response_roi(bidder: int, market: Market, reported: Sequence[BidderType], true_type: BidderType,
                      config: SequentialAuctionConfig = SequentialAuctionConfig()) -> float:
    """Smallest candidate ROI that maximizes value without breaking the true constraints.

    Budgets are reported truthfully, so the bidder's budget in ``reported``
    is replaced by her true one. Falls back to the true ROI when no
    candidate wins anything feasibly.
    """
    reported = list(reported)
    reported[bidder] = true_type
    cands = candidate_rois(bidder, market, reported, true_type.roi)
    if not config.second_price:
        # First-price realized ROI equals the report, so winning anything
        # below the true ROI is infeasible.
        cands = cands[cands >= true_type.roi]
    vals, pays = _evaluate(bidder, market, reported, config, cands)
    feasible = (pays <= true_type.budget + TOL) & ((pays == 0) | (vals >= true_type.roi * pays - TOL))
    if not feasible.any():
        return float(true_type.roi)
    best = vals[feasible].max()
    if best <= TOL:
        return float(true_type.roi)
    # np.unique sorted the candidates, so the first hit is the smallest ROI.
    q = np.flatnonzero(feasible & (vals >= best - TOL))[0]
    return float(cands[q])


def best_response_dynamics(market: Market, true_types: Sequence[BidderType],
                           config: SequentialAuctionConfig = SequentialAuctionConfig(),
                           max_rounds: int = 100, tol: float = EPS) -> DynamicsState:
    """Round-robin best responses starting from truthful reports.

    Stops after the first full round in which no report moves by more than
    ``tol``, or after ``max_rounds`` rounds (``converged=False``).
    """
    if max_rounds < 1:
        raise ValueError("max_rounds must be >= 1")
    check_types(true_types, market)
    reports = list(true_types)
    converged = False
    rnd = 0
    for rnd in range(1, max_rounds + 1):
        moved = 0.0
        for i, t in enumerate(true_types):
            new = best_response_roi(i, market, reports, t, config)
            moved = max(moved, abs(new - reports[i].roi))
            reports[i] = BidderType(t.budget, new)
        if moved <= tol:
            converged = True
            break
    outcome = sequential_auction(market, reports, config)
    return DynamicsState(np.array([r.roi for r in reports]), rnd, outcome, converged)
