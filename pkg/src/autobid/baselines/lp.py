"""Offline revenue upper bound via a dense primal simplex.

Maximize ``sum_ij a_ij v_ij / R_i`` subject to ``sum_i a_ij <= 1`` per item
and ``sum_j a_ij v_ij / R_i <= B_i`` per bidder, ``a >= 0``. The bounds
``a_ij <= 1`` are implied by the item rows and are not added.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..market import BidderType, Market, check_types

# Dense tableau desk-scale limit (~40 bidders x 400 items).
MAX_LP_VARIABLES = 16_000


class LpTooLarge(ValueError):
    pass


class LpUnbounded(ArithmeticError):
    pass


@dataclass(frozen=True)
class LpProblem:
    """``max c @ x  s.t.  A_ub @ x <= b_ub, x >= 0`` with ``b_ub >= 0``."""

    c: np.ndarray
    A_ub: np.ndarray
    b_ub: np.ndarray


@dataclass(frozen=True)
class LpSolution:
    allocation: np.ndarray
    revenue: float
    pivots: int


def simplex_max(c, A, b, tol: float = 1e-9, max_pivots: int = 200_000,
                degenerate_switch: int = 50) -> tuple[np.ndarray, float, int]:
    """Solve ``max c x, A x <= b, x >= 0`` for ``b >= 0`` from the slack basis.

    Dantzig pricing; after ``degenerate_switch`` consecutive degenerate
    pivots it switches to Bland's rule (lowest-index entering variable,
    lowest-index leaving basic variable on ratio ties), which cannot cycle.
    """
    c = np.asarray(c, dtype=float)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    if np.any(b < 0):
        raise ValueError("simplex_max needs b >= 0 (origin feasible)")
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = b
    T[m, :n] = -c
    basis = np.arange(n, n + m)
    bland = False
    degenerate_run = 0
    pivots = 0
    while True:
        red = T[m, :-1]
        if bland:
            cols = np.flatnonzero(red < -tol)
            if cols.size == 0:
                break
            e = cols[0]
        else:
            e = int(np.argmin(red))
            if red[e] >= -tol:
                break
        col = T[:m, e]
        pos = col > tol
        if not pos.any():
            raise LpUnbounded("objective is unbounded")
        ratios = np.full(m, np.inf)
        ratios[pos] = T[:m, -1][pos] / col[pos]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + tol * max(1.0, abs(best)))
        r = ties[np.argmin(basis[ties])]
        degenerate_run = degenerate_run + 1 if best <= tol else 0
        if degenerate_run >= degenerate_switch:
            bland = True
        T[r] /= T[r, e]
        f = T[:, e].copy()
        f[r] = 0.0
        T -= np.outer(f, T[r])
        basis[r] = e
        pivots += 1
        if pivots >= max_pivots:
            raise RuntimeError("simplex pivot limit reached")
    x = np.zeros(n + m)
    x[basis] = T[:m, -1]
    x = np.maximum(x[:n], 0.0)
    return x, float(c @ x), pivots


def build_lp(market: Market, types: Sequence[BidderType]) -> LpProblem:
    budgets, rois = check_types(types, market)
    n, m = market.values.shape
    coef = market.values / rois[:, None]
    A = np.zeros((m + n, n * m))
    for i in range(n):
        A[np.arange(m), i * m + np.arange(m)] = 1.0
        A[m + i, i * m:(i + 1) * m] = coef[i]
    b = np.concatenate([np.ones(m), budgets])
    return LpProblem(coef.ravel(), A, b)


def solve_optimal_lp(market: Market, types: Sequence[BidderType]) -> LpSolution:
    n, m = market.values.shape
    if n * m > MAX_LP_VARIABLES:
        raise LpTooLarge(
            f"{n} bidders x {m} items = {n * m} LP variables exceeds the dense-simplex limit "
            f"of {MAX_LP_VARIABLES}; scale the item count down (e.g. keep bidders x items <= 40 x 400)"
        )
    prob = build_lp(market, types)
    x, obj, pivots = simplex_max(prob.c, prob.A_ub, prob.b_ub)
    return LpSolution(x.reshape(n, m), obj, pivots)
