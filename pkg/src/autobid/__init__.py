"""Truthful auto-bidding auctions for bidders with private budget and ROI constraints.

Submodules: ``market`` (types, outcomes, metrics), ``rank`` (the rank-score
mechanism), ``characterization`` (truthfulness verifiers), ``baselines``
(sequential first/second-price auctions, best-response dynamics, LP bound)
and ``experiments`` (synthetic markets and the trial runner).
"""
from .extended import NEG_INF, POS_INF, ExtReal, SentinelArithmeticError
from .market import (
    BidderType,
    Market,
    MetricsReport,
    Outcome,
    compute_metrics,
    fairness,
    liquid_welfare,
    revenue,
)
from .rank import ExponentialRankScores, MechanismError, RankScoreFamily, TruthfulAuction, run_truthful_auction

__version__ = "0.1.0"

__all__ = [
    "ExtReal", "POS_INF", "NEG_INF", "SentinelArithmeticError",
    "BidderType", "Market", "Outcome", "MetricsReport",
    "compute_metrics", "revenue", "liquid_welfare", "fairness",
    "RankScoreFamily", "ExponentialRankScores", "TruthfulAuction", "run_truthful_auction", "MechanismError",
]
