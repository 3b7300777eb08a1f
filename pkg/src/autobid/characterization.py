"""Executable truthfulness characterization.

Any truthful allocation rule is described, per bidder and fixed opponents, by
a non-decreasing ``g(B)`` with ``g(0) = 0``; the threshold ROI is
``thr(B) = g(B) / B``. This module maps between ``g`` and two-dimensional
cumulative value functions, evaluates the closed-form ``g`` of the rank
mechanism, and checks sampled value grids and black-box mechanisms against
the truthfulness conditions.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .market import TOL, BidderType, Market, Outcome

CONDITIONS = ("monotone-budget", "monotone-roi", "budget-jump", "roi-drop", "flat-below-threshold", "budget-invariant-above", "level-set-corner", "DSIC", "IR")

Mechanism = Callable[[Market, Sequence[BidderType]], Outcome]


# --- threshold curves -------------------------------------------------------

@dataclass(frozen=True)
class ThresholdCurve:
    """Piecewise-linear non-decreasing ``g`` through ``(budgets[k], g_values[k])``.

    Linear between breakpoints, flat after the last one.
    """

    budgets: np.ndarray
    g_values: np.ndarray

    def __post_init__(self):
        b = np.array(self.budgets, dtype=float)
        g = np.array(self.g_values, dtype=float)
        if b.ndim != 1 or b.shape != g.shape or b.size == 0:
            raise ValueError("budgets and g_values must be equal-length 1-d arrays")
        if b[0] != 0.0 or g[0] != 0.0:
            raise ValueError("curve must start at (0, 0)")
        if np.any(np.diff(b) <= 0):
            raise ValueError("breakpoint budgets must be strictly increasing")
        if np.any(np.diff(g) < 0):
            raise ValueError("g must be non-decreasing")
        b.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "budgets", b)
        object.__setattr__(self, "g_values", g)

    @classmethod
    def from_points(cls, points) -> ThresholdCurve:
        pts = sorted(points)
        return cls(np.array([p[0] for p in pts]), np.array([p[1] for p in pts]))

    def g(self, budget: float) -> float:
        return float(np.interp(budget, self.budgets, self.g_values))

    def thr(self, budget: float) -> float:
        """Threshold ROI; ``inf`` at zero budget."""
        if budget == 0:
            return math.inf
        return self.g(budget) / budget


def _check_items(items) -> tuple[np.ndarray, np.ndarray]:
    items = list(items)
    r = np.array([x[0] for x in items], dtype=float)
    v = np.array([x[1] for x in items], dtype=float)
    if np.any(np.diff(r) >= 0):
        raise ValueError("items must be sorted by strictly decreasing threshold (merge ties first)")
    if np.any(v <= 0):
        raise ValueError("item values must be positive")
    return r, v


def closed_form_g(items, budget: float) -> float:
    """Closed-form ``g(B)`` of the rank mechanism for one bidder.

    ``items`` are ``(r^j, v^j)`` with strictly decreasing ``r``. With prefix
    sums ``V_p``: ``g = r^1 B`` below ``V_1/r^1``; ``V_p`` on
    ``[V_p/r^p, V_p/r^{p+1})``; ``r^{p+1} B`` on
    ``[V_p/r^{p+1}, V_{p+1}/r^{p+1})``; ``V_m`` from ``V_m/r^m`` on.
    """
    r, v = _check_items(items)
    if r.size == 0:
        return 0.0
    V = np.cumsum(v)
    if budget < V[0] / r[0]:
        return float(r[0] * budget)
    for p in range(1, r.size):
        if V[p - 1] / r[p - 1] <= budget < V[p - 1] / r[p]:
            return float(V[p - 1])
        if V[p - 1] / r[p] <= budget < V[p] / r[p]:
            return float(r[p] * budget)
    return float(V[-1])


def closed_form_curve(items) -> ThresholdCurve:
    """Breakpoint form of :func:`closed_form_g` (requires finite thresholds)."""
    r, v = _check_items(items)
    if r.size == 0:
        return ThresholdCurve(np.array([0.0]), np.array([0.0]))
    if not np.all(np.isfinite(r)):
        raise ValueError("a curve with g(0)=0 needs finite thresholds")
    V = np.cumsum(v)
    pts = [(0.0, 0.0), (V[0] / r[0], V[0])]
    for p in range(1, r.size):
        pts.append((V[p - 1] / r[p], V[p - 1]))
        pts.append((V[p] / r[p], V[p]))
    # Thresholds a few ulps apart give coincident breakpoints; keep the higher g.
    merged = [pts[0]]
    for x, y in pts[1:]:
        if x == merged[-1][0]:
            merged[-1] = (x, max(y, merged[-1][1]))
        else:
            merged.append((x, y))
    return ThresholdCurve(np.array([x for x, _ in merged]), np.array([y for _, y in merged]))


def value_from_g(curve: ThresholdCurve, budget: float, roi: float) -> float:
    """Cumulative value of type ``(budget, roi)`` under the curve.

    On or below the threshold the value is ``g(B)``; above it the value is
    ``g(B*)`` with ``B*`` the largest ``B' <= B`` whose threshold still
    reaches ``roi``. ``B*`` is solved exactly on the linear pieces.
    """
    if budget < 0 or roi <= 0:
        raise ValueError("need budget >= 0 and roi > 0")
    g_b = curve.g(budget)
    if budget == 0 or roi * budget <= g_b + 1e-12 * max(1.0, g_b):
        return g_b
    xs, ys = curve.budgets, curve.g_values
    right = budget
    h_right = g_b - roi * budget
    k = int(np.searchsorted(xs, budget, side="right")) - 1
    while k >= 0:
        left = xs[k]
        if left == right:
            k -= 1
            continue
        h_left = ys[k] - roi * left
        if h_left >= 0:
            root = left + h_left / (h_left - h_right) * (right - left)
            return curve.g(root)
        right, h_right = left, h_left
        k -= 1
    return 0.0  # pragma: no cover - h(0) = 0 always stops the walk


# --- value grids --------------------------------------------------------------

@dataclass(frozen=True)
class ValueGrid:
    """Cumulative values ``values[k, l] = v(budget_grid[k], roi_grid[l])``."""

    budget_grid: np.ndarray
    roi_grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        b = np.array(self.budget_grid, dtype=float)
        r = np.array(self.roi_grid, dtype=float)
        v = np.array(self.values, dtype=float)
        if v.shape != (b.size, r.size):
            raise ValueError(f"values shape {v.shape} != ({b.size}, {r.size})")
        if np.any(np.diff(b) <= 0) or np.any(np.diff(r) <= 0):
            raise ValueError("grids must be strictly increasing")
        if np.any(b < 0) or np.any(r <= 0):
            raise ValueError("budgets must be >= 0 and rois > 0")
        if np.any(v < -TOL):
            raise ValueError("cumulative values must be non-negative")
        for a in (b, r, v):
            a.setflags(write=False)
        object.__setattr__(self, "budget_grid", b)
        object.__setattr__(self, "roi_grid", r)
        object.__setattr__(self, "values", v)


def sample_value_grid(value_fn: Callable[[float, float], float], budgets, rois) -> ValueGrid:
    budgets = np.asarray(budgets, dtype=float)
    rois = np.asarray(rois, dtype=float)
    vals = np.array([[value_fn(b, r) for r in rois] for b in budgets])
    return ValueGrid(budgets, rois, vals)


def mechanism_value_grid(mechanism: Mechanism, market: Market, reported: Sequence[BidderType],
                         bidder: int, budgets, rois) -> ValueGrid:
    """Grid of ``bidder``'s cumulative value as her report varies, others fixed."""
    reported = list(reported)

    def value(b, r):
        profile = reported.copy()
        profile[bidder] = BidderType(b, r)
        return float(mechanism(market, profile).values[bidder])

    return sample_value_grid(value, budgets, rois)


def _threshold_index(row: np.ndarray, budget: float, rois: np.ndarray, tol: float) -> int:
    """Index of the largest grid ROI with ``v >= budget * roi``; -1 if none."""
    hits = np.flatnonzero(row >= budget * rois - tol)
    return int(hits[-1]) if hits.size else -1


def threshold_from_values(grid: ValueGrid, budget: float, tol: float = TOL) -> float:
    """Largest grid ROI with ``v(B, R) >= B * R``; 0 if none, ``inf`` at ``B = 0``."""
    k = np.flatnonzero(np.isclose(grid.budget_grid, budget, rtol=0, atol=1e-12))
    if k.size == 0:
        raise ValueError(f"budget {budget} is not on the grid")
    if budget == 0:
        return math.inf
    idx = _threshold_index(grid.values[k[0]], budget, grid.roi_grid, tol)
    return float(grid.roi_grid[idx]) if idx >= 0 else 0.0


# --- reports --------------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    condition: str
    witness: tuple
    magnitude: float

    def to_dict(self) -> dict:
        return {"condition": self.condition, "witness": [list(w) for w in self.witness],
                "magnitude": self.magnitude}


@dataclass(frozen=True)
class FeasibilityReport:
    violations: tuple[Violation, ...] = ()
    resolution: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.violations

    def by_condition(self, condition: str) -> list[Violation]:
        return [v for v in self.violations if v.condition == condition]

    def worst(self) -> dict[str, float]:
        """Largest violation magnitude per condition id."""
        out: dict[str, float] = {}
        for v in self.violations:
            out[v.condition] = max(out.get(v.condition, 0.0), v.magnitude)
        return out

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "resolution": self.resolution,
            "worst": self.worst(),
            "violations": [v.to_dict() for v in self.violations],
        }


def _report(violations: list[Violation], resolution: dict) -> FeasibilityReport:
    order = {c: i for i, c in enumerate(CONDITIONS)}
    violations.sort(key=lambda v: (order[v.condition], v.witness))
    return FeasibilityReport(tuple(violations), resolution)


def check_feasibility_conditions(grid: ValueGrid, tol: float = TOL) -> FeasibilityReport:
    """Check a sampled value grid against the truthfulness structure.

    One-sided limits are replaced by the adjacent grid cell. The jump
    conditions use the neighbouring coordinate as the bound (a jump between
    ``B_{k-1}`` and ``B_k`` needs ``v >= B_{k-1} R``; a drop between ``R_l``
    and ``R_{l+1}`` needs ``v <= B R_{l+1}``), which keeps the checks sound
    at finite resolution. Existence of the limits is assumed, not checked.
    """
    B, R, V = grid.budget_grid, grid.roi_grid, grid.values
    K, L = V.shape
    if K < 2 or L < 2:
        raise ValueError("grids need at least two points per axis")
    out: list[Violation] = []

    def add(cond, witness, mag):
        out.append(Violation(cond, tuple(tuple(float(x) for x in w) for w in witness), float(mag)))

    for k, l in zip(*np.nonzero(V[1:] < V[:-1] - tol)):
        add("monotone-budget", ((B[k], R[l]), (B[k + 1], R[l])), V[k, l] - V[k + 1, l])
    for k, l in zip(*np.nonzero(V[:, 1:] > V[:, :-1] + tol)):
        add("monotone-roi", ((B[k], R[l]), (B[k], R[l + 1])), V[k, l + 1] - V[k, l])

    jump_b = V[1:] > V[:-1] + tol
    low = V[1:] < B[:-1, None] * R[None, :] - tol
    for k, l in zip(*np.nonzero(jump_b & low)):
        add("budget-jump", ((B[k + 1], R[l]),), B[k] * R[l] - V[k + 1, l])

    drop_r = V[:, :-1] > V[:, 1:] + tol
    high = V[:, :-1] > B[:, None] * R[None, 1:] + tol
    for k, l in zip(*np.nonzero(drop_r & high)):
        add("roi-drop", ((B[k], R[l]),), V[k, l] - B[k] * R[l + 1])

    thr_idx = np.array([
        L if b == 0 else _threshold_index(V[k], b, R, tol) for k, b in enumerate(B)
    ])
    for k in range(K):
        t = thr_idx[k]
        if B[k] == 0 or t < 0:
            continue
        at = V[k, t]
        dev = np.abs(V[k, : t + 1] - at)
        for l in np.flatnonzero(dev > tol):
            add("flat-below-threshold", ((B[k], R[l]), (B[k], R[t])), dev[l])
        if at < B[k] * R[t] - tol:
            add("flat-below-threshold", ((B[k], R[t]),), B[k] * R[t] - at)
        if t + 1 < L and at > B[k] * R[t + 1] + tol:
            add("flat-below-threshold", ((B[k], R[t]),), at - B[k] * R[t + 1])

    for k in range(1, K):
        if B[k] == 0:
            continue
        above = np.arange(L) > max(thr_idx[k], thr_idx[k - 1])
        diff = np.abs(V[k] - V[k - 1])
        for l in np.flatnonzero(above & (diff > tol)):
            add("budget-invariant-above", ((B[k], R[l]), (B[k - 1], R[l])), diff[l])

    # If v(B', R) = v(B, R') = c with B' > B and R' < R then v(B, R) = c.
    for k in range(K - 1):
        for l in range(1, L):
            right = V[k + 1:, l]
            below = V[k, :l]
            match = np.abs(right[:, None] - below[None, :]) <= tol
            if not match.any():
                continue
            ks, ls = np.nonzero(match)
            cs = right[ks]
            bad = np.abs(cs - V[k, l]) > tol
            if bad.any():
                q = int(np.argmax(np.where(bad, np.abs(cs - V[k, l]), -1)))
                add("level-set-corner", ((B[k], R[l]), (B[k + 1 + ks[q]], R[l]), (B[k], R[ls[q]])),
                    abs(cs[q] - V[k, l]))

    return _report(out, {"budget_points": K, "roi_points": L, "tolerance": tol})


def brute_force_dsic_check(mechanism: Mechanism, market: Market, reported: Sequence[BidderType],
                           bidder: int, true_budgets, true_rois, report_budgets, report_rois,
                           tol: float = TOL) -> FeasibilityReport:
    """Enumerate true types x misreports for one bidder against fixed opponents.

    Flags every misreport whose utility under the true type beats truthful
    reporting by more than ``tol`` (``DSIC``) and every truthful report whose
    payment breaks the bidder's own constraints (``IR``).
    """
    reported = list(reported)
    true_grid = list(itertools.product(np.asarray(true_budgets, float), np.asarray(true_rois, float)))
    mis_grid = list(itertools.product(np.asarray(report_budgets, float), np.asarray(report_rois, float)))
    cache: dict[tuple[float, float], tuple[float, float]] = {}

    def run(b, r):
        key = (float(b), float(r))
        if key not in cache:
            profile = reported.copy()
            profile[bidder] = BidderType(*key)
            o = mechanism(market, profile)
            cache[key] = (float(o.values[bidder]), float(o.payments[bidder]))
        return cache[key]

    mis = np.array([run(b, r) for b, r in mis_grid])
    mis_vals, mis_pays = mis[:, 0], mis[:, 1]
    out: list[Violation] = []
    for b, r in true_grid:
        v0, p0 = run(b, r)
        ok0 = p0 <= b + tol and (p0 == 0 or v0 >= r * p0 - tol)
        if not ok0:
            out.append(Violation("IR", ((float(b), float(r)),), float(max(p0 - b, r * p0 - v0))))
        base = v0 if ok0 else -math.inf
        feasible = (mis_pays <= b + tol) & ((mis_pays == 0) | (mis_vals >= r * mis_pays - tol))
        gain = np.where(feasible, mis_vals - base, -math.inf)
        for q in np.flatnonzero(gain > tol):
            out.append(Violation("DSIC", ((float(b), float(r)), tuple(map(float, mis_grid[q]))), float(gain[q])))
    return _report(out, {"true_types": len(true_grid), "misreports": len(mis_grid),
                         "mechanism_runs": len(cache), "tolerance": tol})
