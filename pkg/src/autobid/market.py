"""Auction model: bidder types, markets, outcomes and the shared metrics."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .extended import NEG_INF, POS_INF, ExtReal

# Absolute tolerance for money/value comparisons at the documented scales
# (values in [1, 4], budgets up to ~100).
TOL = 1e-9


@dataclass(frozen=True)
class BidderType:
    """Private constraint pair: total budget and target ROI."""

    budget: float
    roi: float

    def __post_init__(self):
        if not np.isfinite(self.budget) or self.budget < 0:
            raise ValueError(f"budget must be finite and >= 0, got {self.budget}")
        if not np.isfinite(self.roi) or self.roi <= 0:
            raise ValueError(f"roi must be finite and > 0, got {self.roi}")

    def to_dict(self) -> dict:
        return {"budget": self.budget, "roi": self.roi}


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Market:
    """Public valuations; ``values[i, j]`` is bidder i's value for item j."""

    values: np.ndarray

    def __post_init__(self):
        v = _frozen(self.values)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError(f"values must be a non-empty 2-d matrix, got shape {v.shape}")
        if not np.all(np.isfinite(v)) or np.any(v <= 0):
            raise ValueError("all valuations must be finite and strictly positive")
        object.__setattr__(self, "values", v)

    @property
    def n_bidders(self) -> int:
        return self.values.shape[0]

    @property
    def n_items(self) -> int:
        return self.values.shape[1]


def check_types(types: Sequence[BidderType], market: Market) -> tuple[np.ndarray, np.ndarray]:
    """Validate a type profile against ``market``; return (budgets, rois) arrays."""
    if len(types) != market.n_bidders:
        raise ValueError(f"expected {market.n_bidders} bidder types, got {len(types)}")
    for t in types:
        if not isinstance(t, BidderType):
            raise TypeError(f"expected BidderType, got {type(t).__name__}")
    budgets = np.array([t.budget for t in types], dtype=float)
    rois = np.array([t.roi for t in types], dtype=float)
    return budgets, rois


@dataclass(frozen=True)
class Outcome:
    """Fractional allocation with per-bidder payments and cumulative values."""

    allocation: np.ndarray
    payments: np.ndarray
    values: np.ndarray
    unsold_mass: np.ndarray

    @classmethod
    def from_allocation(cls, market: Market, allocation, payments) -> Outcome:
        a = np.clip(np.asarray(allocation, dtype=float), 0.0, 1.0)
        if a.shape != market.values.shape:
            raise ValueError(f"allocation shape {a.shape} != market shape {market.values.shape}")
        p = np.asarray(payments, dtype=float)
        if p.shape != (market.n_bidders,):
            raise ValueError("one payment per bidder required")
        if np.any(p < 0):
            raise ValueError("payments must be non-negative")
        mass = a.sum(axis=0)
        if np.any(mass > 1.0 + TOL):
            raise AssertionError(f"item over-allocated: max mass {mass.max()!r}")
        values = (market.values * a).sum(axis=1)
        return cls(_frozen(a), _frozen(p), _frozen(values), _frozen(np.clip(1.0 - mass, 0.0, 1.0)))

    def to_dict(self) -> dict:
        return {
            "allocation": self.allocation.tolist(),
            "payments": self.payments.tolist(),
            "values": self.values.tolist(),
            "unsold_mass": self.unsold_mass.tolist(),
        }


@dataclass(frozen=True)
class MetricsReport:
    revenue: float
    liquid_welfare: float
    fairness: float
    realized_roi: tuple[ExtReal, ...] = field(default=())
    utilities: tuple[ExtReal, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "revenue": self.revenue,
            "liquid_welfare": self.liquid_welfare,
            "fairness": self.fairness,
            "realized_roi": [r.to_json() for r in self.realized_roi],
            "utilities": [u.to_json() for u in self.utilities],
        }


def realized_roi(value: float, payment: float) -> ExtReal:
    """value / payment, or +inf when nothing is paid."""
    if payment == 0:
        return POS_INF
    return ExtReal(value / payment)


def bidder_utility(btype: BidderType, value: float, payment: float, tol: float = TOL) -> ExtReal:
    """Cumulative value if both true constraints hold, otherwise -inf.

    The ROI test is done multiplicatively (``value >= roi * payment``) so that
    exact truthful payments ``value / roi`` are not rejected by rounding.
    """
    if payment > btype.budget + tol:
        return NEG_INF
    if payment > 0 and value < btype.roi * payment - tol:
        return NEG_INF
    return ExtReal(value)


def revenue(outcome: Outcome) -> float:
    return float(np.sum(outcome.payments))


def _lw_terms(types: Sequence[BidderType], outcome: Outcome) -> np.ndarray:
    budgets = np.array([t.budget for t in types], dtype=float)
    rois = np.array([t.roi for t in types], dtype=float)
    return np.minimum(outcome.values / rois, budgets)


def liquid_welfare(market: Market, types: Sequence[BidderType], outcome: Outcome) -> float:
    """Sum of min(v_i / R_i, B_i) over bidders whose true constraints hold."""
    check_types(types, market)
    terms = _lw_terms(types, outcome)
    ok = [
        bidder_utility(t, v, p).is_finite
        for t, v, p in zip(types, outcome.values, outcome.payments)
    ]
    return float(np.sum(terms[np.array(ok, dtype=bool)]))


def fairness(market: Market, types: Sequence[BidderType], outcome: Outcome) -> float:
    """Smallest per-bidder liquid-welfare term over all bidders."""
    check_types(types, market)
    return float(np.min(_lw_terms(types, outcome)))


def compute_metrics(market: Market, types: Sequence[BidderType], outcome: Outcome) -> MetricsReport:
    rois = tuple(realized_roi(v, p) for v, p in zip(outcome.values, outcome.payments))
    utils = tuple(bidder_utility(t, v, p) for t, v, p in zip(types, outcome.values, outcome.payments))
    return MetricsReport(
        revenue=revenue(outcome),
        liquid_welfare=liquid_welfare(market, types, outcome),
        fairness=fairness(market, types, outcome),
        realized_roi=rois,
        utilities=utils,
    )


# --- file formats -----------------------------------------------------------

def market_from_dict(data: dict) -> tuple[Market, list[BidderType]]:
    """Parse ``{"values": [[..]], "types": [{"budget":.., "roi":..}, ..]}``."""
    market = Market(np.asarray(data["values"], dtype=float))
    types = [BidderType(float(t["budget"]), float(t["roi"])) for t in data.get("types", [])]
    if types:
        check_types(types, market)
    return market, types


def market_to_dict(market: Market, types: Sequence[BidderType]) -> dict:
    return {"values": market.values.tolist(), "types": [t.to_dict() for t in types]}


def load_market(path: str | Path) -> tuple[Market, list[BidderType]]:
    with open(path) as fh:
        return market_from_dict(json.load(fh))


def load_types(path: str | Path) -> list[BidderType]:
    """Read a bare type list, or the ``types`` field of a market file."""
    with open(path) as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        data = data["types"]
    return [BidderType(float(t["budget"]), float(t["roi"])) for t in data]


METRICS_CSV_HEADER = ("mechanism", "run", "revenue", "liquid_welfare", "fairness")


def metrics_to_csv(rows: Iterable[tuple[str, int, MetricsReport]]) -> str:
    """Render ``(mechanism, run, report)`` triples as CSV text."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(METRICS_CSV_HEADER)
    for mech, run, rep in rows:
        writer.writerow([mech, run, repr(rep.revenue), repr(rep.liquid_welfare), repr(rep.fairness)])
    return buf.getvalue()
