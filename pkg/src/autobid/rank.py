"""Truthful auction with personalized rank scores and critical-ROI trimming.

Items go to the highest virtual bid ``v_ij * f_ij(R_i)``. For each winner we
compute the largest ROI ``r_ij`` at which she would still rank first, turn
her budget into a critical ROI over those thresholds, trim the candidate set
so that the kept value is exactly ``budget * critical_roi``, and charge
``min(value / R_i, B_i)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .extended import ExtReal
from .market import TOL, BidderType, Market, Outcome, check_types


class MechanismError(RuntimeError):
    """Internal inconsistency inside a mechanism run (a bug, not bad input)."""


class RankScoreFamily:
    """Per-(bidder, item) non-increasing score functions with inverses.

    Subclasses implement the vectorized :meth:`scores` and
    :meth:`inverse_matrix`; the scalar accessors are derived from them.
    """

    shape: tuple[int, int]

    def scores(self, rois: np.ndarray) -> np.ndarray:
        """Matrix ``f_ij(rois[i])``."""
        raise NotImplementedError

    def inverse_matrix(self, s: np.ndarray) -> np.ndarray:
        """Elementwise ``f_ij^{-1}(s[i, j])`` as floats (``±inf`` allowed)."""
        raise NotImplementedError

    def score(self, i: int, j: int, roi: float) -> float:
        rois = np.zeros(self.shape[0])
        rois[i] = roi
        return float(self.scores(rois)[i, j])

    def inverse(self, i: int, j: int, s: float) -> ExtReal:
        mat = np.ones(self.shape)
        mat[i, j] = s
        return ExtReal(float(self.inverse_matrix(mat)[i, j]))


class ExponentialRankScores(RankScoreFamily):
    """``f_ij(R) = alpha_ij * exp(-beta * R)``.

    ``alpha_ij = 0`` means bidder i never wins item j.
    """

    def __init__(self, alpha, beta: float):
        alpha = np.array(alpha, dtype=float)
        if alpha.ndim != 2:
            raise ValueError("alpha must be a matrix")
        if np.any(alpha < 0) or not np.all(np.isfinite(alpha)):
            raise ValueError("alpha entries must be finite and non-negative")
        if not (beta > 0 and math.isfinite(beta)):
            raise ValueError("beta must be a positive real")
        alpha.setflags(write=False)
        self.alpha = alpha
        self.beta = float(beta)
        self.shape = alpha.shape

    def scores(self, rois):
        rois = np.asarray(rois, dtype=float)
        return self.alpha * np.exp(-self.beta * rois)[:, None]

    def inverse_matrix(self, s):
        s = np.asarray(s, dtype=float)
        out = np.empty(self.shape)
        zero_alpha = self.alpha == 0
        zero_s = (s <= 0) & ~zero_alpha
        normal = ~zero_alpha & ~zero_s
        out[zero_alpha] = -math.inf
        out[zero_s] = math.inf
        out[normal] = np.log(self.alpha[normal] / s[normal]) / self.beta
        return out

    def to_dict(self) -> dict:
        return {"beta": self.beta, "alpha": self.alpha.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> ExponentialRankScores:
        return cls(np.asarray(data["alpha"], dtype=float), float(data["beta"]))

    def __repr__(self):
        return f"ExponentialRankScores(beta={self.beta}, shape={self.shape})"


@dataclass(frozen=True)
class WinThresholds:
    """Provisional winners, second-highest virtual bids and win-threshold ROIs.

    ``winners[j]`` is -1 when every virtual bid for item j is zero. ``r`` is
    filled by :func:`win_threshold_rois`; entries outside a bidder's
    candidate set are ``-inf``.
    """

    winners: np.ndarray
    second_price: np.ndarray
    r: np.ndarray | None = None

    def candidate_set(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.winners == i)


@dataclass(frozen=True)
class CriticalRoi:
    r_c: float
    slack: float


def compute_virtual_bids(market: Market, reported: Sequence[BidderType], family: RankScoreFamily) -> np.ndarray:
    _, rois = check_types(reported, market)
    if tuple(family.shape) != market.values.shape:
        raise ValueError(f"rank family shape {family.shape} != market shape {market.values.shape}")
    return market.values * family.scores(rois)


def provisional_allocation(virtual_bids: np.ndarray) -> WinThresholds:
    """Give each item to its highest virtual bid (ties to the lowest index)."""
    b = np.asarray(virtual_bids, dtype=float)
    n, m = b.shape
    winners = np.argmax(b, axis=0)
    top = b[winners, np.arange(m)]
    if n > 1:
        others = b.copy()
        others[winners, np.arange(m)] = -np.inf
        second = others.max(axis=0)
    else:
        second = np.zeros(m)
    winners = np.where(top > 0, winners, -1)
    return WinThresholds(winners=winners, second_price=second)


def win_threshold_rois(wt: WinThresholds, market: Market, family: RankScoreFamily) -> WinThresholds:
    """Fill ``r[i, j] = f_ij^{-1}(c_j / v_ij)`` for every item in bidder i's candidate set."""
    n, m = market.values.shape
    won = np.zeros((n, m), dtype=bool)
    cols = np.flatnonzero(wt.winners >= 0)
    won[wt.winners[cols], cols] = True
    ratio = np.where(won, wt.second_price[None, :] / market.values, 1.0)
    # A winner's price ratio can never exceed her score at R -> 0.
    ceiling = family.scores(np.zeros(n))
    bad = won & (ratio > ceiling * (1 + 1e-12) + 1e-15)
    if np.any(bad):
        i, j = np.argwhere(bad)[0]
        raise MechanismError(f"bidder {i} cannot have won item {j}: c/v={ratio[i, j]!r} > f(0)={ceiling[i, j]!r}")
    r = np.where(won, family.inverse_matrix(ratio), -math.inf)
    r.setflags(write=False)
    return replace(wt, r=r)


def merge_equal_thresholds(r: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sort by threshold descending and merge equal thresholds (values summed)."""
    r = np.asarray(r, dtype=float)
    v = np.asarray(v, dtype=float)
    if r.size == 0:
        return r, v
    uniq, inv = np.unique(r, return_inverse=True)
    sums = np.zeros(uniq.size)
    np.add.at(sums, inv, v)
    return uniq[::-1], sums[::-1]


def critical_roi(budget: float, items) -> CriticalRoi:
    """Largest R with ``sum(v_j for r_j >= R) / R >= budget``, plus the slack.

    ``items`` is an iterable of ``(r_j, v_j)``. Scans threshold groups from
    the top; within group p the left-hand side is ``V_p / R`` on
    ``(r_{p+1}, r_p]``.
    """
    # Thresholds <= 0 can never be met by a positive ROI.
    items = [(r, v) for r, v in items if r > 0]
    if not items:
        return CriticalRoi(math.inf, 0.0)
    rs, vs = merge_equal_thresholds([r for r, _ in items], [v for _, v in items])
    prefix = 0.0
    for p in range(rs.size):
        prefix += vs[p]
        with np.errstate(over="ignore"):
            # Subnormal budgets overflow to +inf, which is the right limit.
            cap = prefix / budget if budget > 0 else math.inf
        lower = rs[p + 1] if p + 1 < rs.size else 0.0
        if cap < rs[p]:
            if cap > lower:
                return CriticalRoi(float(cap), 0.0)
        elif rs[p] > lower:
            slack = 0.0 if math.isinf(rs[p]) else prefix / rs[p] - budget
            return CriticalRoi(float(rs[p]), max(float(slack), 0.0))
    raise MechanismError("critical ROI scan fell through")  # pragma: no cover


def trim_allocation(r: np.ndarray, v: np.ndarray, critical: CriticalRoi, reported_roi: float) -> np.ndarray:
    """Fractions kept for each candidate item (aligned with ``r`` and ``v``).

    Below the critical ROI the bidder keeps items with ``r >= r_c`` minus
    ``slack * r_c`` of value taken from the items sitting exactly at
    ``r_c``, in order. Above it she keeps her whole candidate set.
    """
    r = np.asarray(r, dtype=float)
    v = np.asarray(v, dtype=float)
    frac = np.ones(r.size)
    if r.size == 0 or reported_roi > critical.r_c:
        return frac
    frac[r < critical.r_c] = 0.0
    if critical.slack > 0:
        to_remove = critical.slack * critical.r_c
        tied = np.flatnonzero(r == critical.r_c)
        avail = v[tied].sum()
        if to_remove > avail + TOL:
            raise MechanismError(f"removal {to_remove!r} exceeds tied value {avail!r}")
        for j in tied:
            if to_remove <= 0:
                break
            take = min(v[j], to_remove)
            frac[j] = 1.0 - take / v[j]
            to_remove -= take
    return np.clip(frac, 0.0, 1.0)


def truthful_payment(value: float, btype: BidderType) -> float:
    if value <= 0:
        return 0.0
    return min(value / btype.roi, btype.budget)


def run_truthful_auction(market: Market, reported: Sequence[BidderType], family: RankScoreFamily) -> Outcome:
    bids = compute_virtual_bids(market, reported, family)
    wt = win_threshold_rois(provisional_allocation(bids), market, family)
    allocation = np.zeros(market.values.shape)
    payments = np.zeros(market.n_bidders)
    for i, t in enumerate(reported):
        items = wt.candidate_set(i)
        if items.size == 0:
            continue
        # A provisional win at the reported ROI means the threshold is at least
        # that ROI; the log/exp round trip can land an ulp below it.
        r = np.maximum(wt.r[i, items], t.roi)
        v = market.values[i, items]
        crit = critical_roi(t.budget, zip(r, v))
        allocation[i, items] = trim_allocation(r, v, crit, t.roi)
        payments[i] = truthful_payment(float(market.values[i] @ allocation[i]), t)
    return Outcome.from_allocation(market, allocation, payments)


class TruthfulAuction:
    """Callable wrapper ``mechanism(market, reported) -> Outcome``."""

    def __init__(self, family: RankScoreFamily):
        self.family = family

    def __call__(self, market: Market, reported: Sequence[BidderType]) -> Outcome:
        return run_truthful_auction(market, reported, self.family)

    def __repr__(self):
        return f"TruthfulAuction({self.family!r})"
