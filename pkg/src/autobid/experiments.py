"""Synthetic markets, rank-score sampling and the multi-trial experiment runner.

Randomness: every draw comes from numpy's PCG64 through
``SeedSequence(seed, spawn_key=(trial, stream))``, one stream per purpose
(values, budgets, rois, alpha). Matrices are filled row-major
(bidder, item), so a given (seed, trial) always yields the same market
regardless of which mechanisms run or in what order trials execute.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .baselines import LpTooLarge, SequentialAuctionConfig, best_response_dynamics, solve_optimal_lp
from .baselines.lp import MAX_LP_VARIABLES
from .market import BidderType, Market, Outcome, compute_metrics
from .rank import ExponentialRankScores, run_truthful_auction

log = logging.getLogger(__name__)

MECHANISMS = ("dsic", "fpa-br", "spa-br", "lp-opt")
CSV_COLUMNS = ("mechanism", "trial", "n_bidders", "n_items", "revenue", "liquid_welfare",
               "fairness", "converged", "beta")
AXES = {"bidders": "n_bidders", "items": "n_items", "beta": "beta"}

_STREAM_VALUES, _STREAM_BUDGETS, _STREAM_ROIS, _STREAM_ALPHA = range(4)

SYMMETRIC_RANGES = {"value": (1.0, 4.0), "budget": (40.0, 80.0), "roi": (1.0, 3.0)}
MIXED_RANGES = {
    "value": ((1.0, 2.0), (2.0, 3.0)),
    "budget": ((20.0, 40.0), (80.0, 100.0)),
    "roi": ((1.0, 2.0), (2.0, 3.0)),
}
# Group g -> (value level, budget level, roi level); 0 = low, 1 = high.
MIXED_GROUPS = tuple(itertools.product((0, 1), repeat=3))


def rng_for(seed: int, trial: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(trial, stream))))


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str = "symmetric"
    n_bidders: int = 10
    n_items: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("symmetric", "mixed"):
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if self.n_bidders < 1 or self.n_items < 1:
            raise ValueError("need at least one bidder and one item")


@dataclass(frozen=True)
class RankScoreSpec:
    """``alpha_ij ~ max(0, N(mu_g, sigma_g^2))`` per bidder group g; shared ``beta``.

    ``mu`` and ``sigma`` hold one entry per group, or a single entry used
    for every group.
    """

    beta: float = 0.5
    mu: tuple[float, ...] = (1.0,)
    sigma: tuple[float, ...] = (0.0,)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "mu", tuple(float(x) for x in np.atleast_1d(self.mu)))
        object.__setattr__(self, "sigma", tuple(float(x) for x in np.atleast_1d(self.sigma)))
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if any(s < 0 for s in self.sigma):
            raise ValueError("sigma must be non-negative")


@dataclass(frozen=True)
class ExperimentConfig:
    generator: GeneratorSpec = field(default_factory=GeneratorSpec)
    ranks: RankScoreSpec = field(default_factory=RankScoreSpec)
    mechanisms: tuple[str, ...] = MECHANISMS
    trials: int = 50
    max_rounds: int = 100

    def __post_init__(self):
        object.__setattr__(self, "mechanisms", tuple(self.mechanisms))
        unknown = set(self.mechanisms) - set(MECHANISMS)
        if unknown:
            raise ValueError(f"unknown mechanisms {sorted(unknown)}; choose from {MECHANISMS}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mechanisms"] = list(self.mechanisms)
        d["ranks"]["mu"] = list(self.ranks.mu)
        d["ranks"]["sigma"] = list(self.ranks.sigma)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentConfig:
        return cls(
            generator=GeneratorSpec(**data.get("generator", {})),
            ranks=RankScoreSpec(**data.get("ranks", {})),
            mechanisms=tuple(data.get("mechanisms", MECHANISMS)),
            trials=int(data.get("trials", 50)),
            max_rounds=int(data.get("max_rounds", 100)),
        )


# --- generators -------------------------------------------------------------------

def gen_symmetric(spec: GeneratorSpec, trial: int = 0) -> tuple[Market, list[BidderType]]:
    """i.i.d. bidders: v ~ U[1,4], B ~ U[40,80], R ~ U[1,3]."""
    if spec.kind != "symmetric":
        raise ValueError("gen_symmetric needs a symmetric GeneratorSpec")
    n, m = spec.n_bidders, spec.n_items
    values = rng_for(spec.seed, trial, _STREAM_VALUES).uniform(*SYMMETRIC_RANGES["value"], size=(n, m))
    budgets = rng_for(spec.seed, trial, _STREAM_BUDGETS).uniform(*SYMMETRIC_RANGES["budget"], size=n)
    rois = rng_for(spec.seed, trial, _STREAM_ROIS).uniform(*SYMMETRIC_RANGES["roi"], size=n)
    return Market(values), [BidderType(float(b), float(r)) for b, r in zip(budgets, rois)]


def gen_mixed(spec: GeneratorSpec, trial: int = 0) -> tuple[Market, list[BidderType], np.ndarray]:
    """Eight groups (low/high value x budget x ROI), bidders assigned round-robin."""
    if spec.kind != "mixed":
        raise ValueError("gen_mixed needs a mixed GeneratorSpec")
    n, m = spec.n_bidders, spec.n_items
    groups = np.arange(n) % len(MIXED_GROUPS)
    levels = np.array([MIXED_GROUPS[g] for g in groups])

    def scaled(u, kind, col):
        lo = np.array([MIXED_RANGES[kind][lv][0] for lv in levels[:, col]])
        hi = np.array([MIXED_RANGES[kind][lv][1] for lv in levels[:, col]])
        if u.ndim == 2:
            lo, hi = lo[:, None], hi[:, None]
        return lo + u * (hi - lo)

    values = scaled(rng_for(spec.seed, trial, _STREAM_VALUES).random((n, m)), "value", 0)
    budgets = scaled(rng_for(spec.seed, trial, _STREAM_BUDGETS).random(n), "budget", 1)
    rois = scaled(rng_for(spec.seed, trial, _STREAM_ROIS).random(n), "roi", 2)
    types = [BidderType(float(b), float(r)) for b, r in zip(budgets, rois)]
    return Market(values), types, groups


def generate(spec: GeneratorSpec, trial: int = 0) -> tuple[Market, list[BidderType], np.ndarray]:
    if spec.kind == "symmetric":
        market, types = gen_symmetric(spec, trial)
        return market, types, np.zeros(spec.n_bidders, dtype=int)
    return gen_mixed(spec, trial)


def sample_rank_scores(ranks: RankScoreSpec, groups: Sequence[int], n: int, m: int,
                       trial: int = 0) -> ExponentialRankScores:
    groups = np.asarray(groups, dtype=int)
    if groups.shape != (n,):
        raise ValueError("one group label per bidder required")
    mu = np.asarray(ranks.mu)
    sigma = np.asarray(ranks.sigma)
    if mu.size == 1:
        mu = np.full(groups.max() + 1, mu[0])
    if sigma.size == 1:
        sigma = np.full(groups.max() + 1, sigma[0])
    if groups.max() >= min(mu.size, sigma.size):
        raise ValueError("mu/sigma need one entry per group")
    draws = rng_for(ranks.seed, trial, _STREAM_ALPHA).standard_normal((n, m))
    alpha = np.maximum(0.0, mu[groups][:, None] + sigma[groups][:, None] * draws)
    return ExponentialRankScores(alpha, ranks.beta)


# --- runner ------------------------------------------------------------------------

@dataclass(frozen=True)
class TrialRow:
    mechanism: str
    trial: int
    n_bidders: int
    n_items: int
    revenue: float
    liquid_welfare: float
    fairness: float
    converged: bool | None
    beta: float
    all_finite: bool = True

    def csv_fields(self) -> list[str]:
        conv = "" if self.converged is None else str(bool(self.converged)).lower()
        return [self.mechanism, str(self.trial), str(self.n_bidders), str(self.n_items),
                repr(float(self.revenue)), repr(float(self.liquid_welfare)), repr(float(self.fairness)),
                conv, repr(float(self.beta))]


@dataclass
class ExperimentTable:
    rows: list[TrialRow] = field(default_factory=list)
    dominance_violations: list[tuple[int, str, float, float]] = field(default_factory=list)

    def extend(self, other: ExperimentTable) -> None:
        self.rows.extend(other.rows)
        self.dominance_violations.extend(other.dominance_violations)

    def select(self, mechanism: str) -> list[TrialRow]:
        return [r for r in self.rows if r.mechanism == mechanism]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow(r.csv_fields())
        return buf.getvalue()

    def write_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv())

    @classmethod
    def read_csv(cls, path: str | Path) -> ExperimentTable:
        rows = []
        with open(path, newline="") as fh:
            for rec in csv.DictReader(fh):
                conv = rec.get("converged", "")
                rows.append(TrialRow(
                    mechanism=rec["mechanism"], trial=int(rec["trial"]),
                    n_bidders=int(rec["n_bidders"]), n_items=int(rec["n_items"]),
                    revenue=float(rec["revenue"]), liquid_welfare=float(rec["liquid_welfare"]),
                    fairness=float(rec["fairness"]),
                    converged=None if conv == "" else conv == "true",
                    beta=float(rec.get("beta") or "nan"),
                ))
        return cls(rows)

    def summary(self) -> list[dict]:
        """Mean and standard error per (mechanism, n_bidders, n_items, beta)."""
        keyed: dict[tuple, list[TrialRow]] = {}
        for r in self.rows:
            keyed.setdefault((r.mechanism, r.n_bidders, r.n_items, r.beta), []).append(r)
        out = []
        for (mech, nb, ni, beta), rs in sorted(keyed.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2], kv[0][3])):
            rec = {"mechanism": mech, "n_bidders": nb, "n_items": ni, "beta": beta, "trials": len(rs)}
            for metric in ("revenue", "liquid_welfare", "fairness"):
                mean, err = _mean_err([getattr(r, metric) for r in rs])
                rec[f"{metric}_mean"], rec[f"{metric}_err"] = mean, err
            out.append(rec)
        return out


def _mean_err(xs: Sequence[float]) -> tuple[float, float]:
    a = np.asarray(xs, dtype=float)
    if a.size < 2:
        return float(a.mean()), 0.0
    return float(a.mean()), float(a.std(ddof=1) / math.sqrt(a.size))


def lp_outcome(market: Market, types: Sequence[BidderType]) -> Outcome:
    sol = solve_optimal_lp(market, types)
    rois = np.array([t.roi for t in types])
    pays = (market.values * sol.allocation).sum(axis=1) / rois
    return Outcome.from_allocation(market, sol.allocation, pays)


def run_trial(config: ExperimentConfig, trial: int) -> ExperimentTable:
    gen = config.generator
    market, types, groups = generate(gen, trial)
    table = ExperimentTable()
    outcomes: dict[str, tuple[Outcome, bool | None]] = {}
    for mech in config.mechanisms:
        if mech == "dsic":
            family = sample_rank_scores(config.ranks, groups, gen.n_bidders, gen.n_items, trial)
            outcomes[mech] = (run_truthful_auction(market, types, family), None)
        elif mech in ("fpa-br", "spa-br"):
            form = "first-price" if mech == "fpa-br" else "second-price"
            state = best_response_dynamics(market, types, SequentialAuctionConfig(form), config.max_rounds)
            outcomes[mech] = (state.history, state.converged)
        else:
            outcomes[mech] = (lp_outcome(market, types), None)
    for mech, (outcome, conv) in outcomes.items():
        rep = compute_metrics(market, types, outcome)
        table.rows.append(TrialRow(mech, trial, gen.n_bidders, gen.n_items, rep.revenue, rep.liquid_welfare,
                                   rep.fairness, conv, config.ranks.beta,
                                   all(u.is_finite for u in rep.utilities)))
    if "lp-opt" in outcomes:
        bound = table.rows[[r.mechanism for r in table.rows].index("lp-opt")].revenue
        for r in table.rows:
            if r.revenue > bound + 1e-9:
                log.warning("trial %d: %s revenue %.12g exceeds LP bound %.12g", trial, r.mechanism, r.revenue, bound)
                table.dominance_violations.append((trial, r.mechanism, r.revenue, bound))
    return table


def run_experiment(config: ExperimentConfig, progress: Callable[[int], None] | None = None) -> ExperimentTable:
    """Run every trial in index order and collect one row per (trial, mechanism)."""
    gen = config.generator
    if "lp-opt" in config.mechanisms and gen.n_bidders * gen.n_items > MAX_LP_VARIABLES:
        raise LpTooLarge(
            f"lp-opt on {gen.n_bidders} x {gen.n_items} exceeds the {MAX_LP_VARIABLES}-variable LP limit; "
            "drop lp-opt from mechanisms or scale n_items down"
        )
    table = ExperimentTable()
    for trial in range(config.trials):
        table.extend(run_trial(config, trial))
        if progress is not None:
            progress(trial)
    return table


def with_axis(config: ExperimentConfig, axis: str, x) -> ExperimentConfig:
    if axis == "bidders":
        return replace(config, generator=replace(config.generator, n_bidders=int(x)))
    if axis == "items":
        return replace(config, generator=replace(config.generator, n_items=int(x)))
    if axis == "beta":
        return replace(config, ranks=replace(config.ranks, beta=float(x)))
    raise ValueError(f"unknown axis {axis!r}; choose from {sorted(AXES)}")


def run_sweep(config: ExperimentConfig, axis: str, xs: Iterable) -> ExperimentTable:
    table = ExperimentTable()
    for x in xs:
        table.extend(run_experiment(with_axis(config, axis, x)))
    return table


def emit_plot_data(table: ExperimentTable, axis: str, out_dir: str | Path,
                   mechanisms: Sequence[str] | None = None) -> dict[str, Path]:
    """Write one series CSV per mechanism: x, trial count, mean and stderr per metric."""
    if axis not in AXES:
        raise ValueError(f"unknown axis {axis!r}; choose from {sorted(AXES)}")
    if not table.rows:
        raise ValueError("empty table")
    if mechanisms is None:
        mechanisms = sorted({r.mechanism for r in table.rows})
    if not mechanisms:
        raise ValueError("no mechanisms selected")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    key = AXES[axis]
    written = {}
    for mech in mechanisms:
        by_x: dict[float, list[TrialRow]] = {}
        for r in table.select(mech):
            by_x.setdefault(getattr(r, key), []).append(r)
        if not by_x:
            raise ValueError(f"mechanism {mech!r} has no rows")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "trials", "revenue_mean", "revenue_err", "liquid_welfare_mean",
                    "liquid_welfare_err", "fairness_mean", "fairness_err"])
        for x in sorted(by_x):
            rs = by_x[x]
            cells = [repr(x), str(len(rs))]
            for metric in ("revenue", "liquid_welfare", "fairness"):
                mean, err = _mean_err([getattr(r, metric) for r in rs])
                cells += [repr(mean), repr(err)]
            w.writerow(cells)
        path = out_dir / f"{mech}.csv"
        path.write_text(buf.getvalue())
        written[mech] = path
    return written


# --- presets --------------------------------------------------------------------------

def load_presets() -> dict[str, dict]:
    return json.loads(resources.files("autobid").joinpath("presets.json").read_text())


def preset(name: str) -> ExperimentConfig:
    presets = load_presets()
    if name not in presets:
        raise KeyError(f"unknown preset {name!r}; available: {sorted(presets)}")
    data = dict(presets[name])
    data.pop("sweep", None)
    data.pop("note", None)
    return ExperimentConfig.from_dict(data)


def load_config(path: str | Path) -> tuple[ExperimentConfig, dict | None]:
    """Read an experiment JSON; an optional ``sweep`` key holds ``{"axis":.., "values": [..]}``."""
    with open(path) as fh:
        data = json.load(fh)
    sweep = data.pop("sweep", None)
    data.pop("note", None)
    return ExperimentConfig.from_dict(data), sweep
