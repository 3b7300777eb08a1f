from .dynamics import DynamicsState, best_response_dynamics, best_response_roi, candidate_rois
from .lp import LpProblem, LpSolution, LpTooLarge, build_lp, simplex_max, solve_optimal_lp
from .sequential import (
    FIRST_PRICE,
    SECOND_PRICE,
    SequentialAuction,
    SequentialAuctionConfig,
    sequential_auction,
)

__all__ = [
    "DynamicsState", "best_response_dynamics", "best_response_roi", "candidate_rois",
    "LpProblem", "LpSolution", "LpTooLarge", "build_lp", "simplex_max", "solve_optimal_lp",
    "FIRST_PRICE", "SECOND_PRICE", "SequentialAuction", "SequentialAuctionConfig", "sequential_auction",
]
