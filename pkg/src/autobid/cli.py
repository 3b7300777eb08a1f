"""Command-line entry point: ``autobid <subcommand> ...``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .baselines import SequentialAuctionConfig, best_response_dynamics, solve_optimal_lp
from .characterization import check_feasibility_conditions, mechanism_value_grid
from .experiments import AXES, ExperimentTable, emit_plot_data, load_config, preset, run_experiment, run_sweep
from .market import compute_metrics, load_market, load_types
from .rank import ExponentialRankScores, TruthfulAuction, run_truthful_auction


def parse_grid(text: str) -> np.ndarray:
    """``"lo:hi:n"`` -> ``n`` evenly spaced points from lo to hi inclusive."""
    try:
        lo, hi, n = text.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like lo:hi:n, got {text!r}") from None
    if n < 2 or not hi > lo:
        raise argparse.ArgumentTypeError("grid needs n >= 2 and hi > lo")
    return np.linspace(lo, hi, n)


def load_ranks(path: str) -> ExponentialRankScores:
    with open(path) as fh:
        return ExponentialRankScores.from_dict(json.load(fh))


def _dump(obj) -> None:
    json.dump(obj, sys.stdout, indent=2)
    sys.stdout.write("\n")


def cmd_run_auction(args) -> int:
    market, types = load_market(args.market)
    family = load_ranks(args.ranks)
    reported = load_types(args.report_types) if args.report_types else types
    outcome = run_truthful_auction(market, reported, family)
    _dump({**outcome.to_dict(), "metrics": compute_metrics(market, types, outcome).to_dict()})
    return 0


def cmd_verify(args) -> int:
    market, types = load_market(args.market)
    mech = TruthfulAuction(load_ranks(args.ranks))
    if not 0 <= args.bidder < market.n_bidders:
        raise SystemExit(f"bidder index {args.bidder} out of range")
    grid = mechanism_value_grid(mech, market, types, args.bidder, args.b_grid, args.r_grid)
    report = check_feasibility_conditions(grid, tol=args.tol)
    _dump(report.to_dict())
    return 0 if report.passed else 1


def cmd_best_response(args) -> int:
    market, types = load_market(args.market)
    state = best_response_dynamics(market, types, SequentialAuctionConfig(args.form), args.max_rounds)
    _dump({
        "reported_rois": state.reported_rois.tolist(),
        "rounds": state.round,
        "converged": state.converged,
        "outcome": state.history.to_dict(),
        "metrics": compute_metrics(market, types, state.history).to_dict(),
    })
    return 0


def cmd_lp_opt(args) -> int:
    market, types = load_market(args.market)
    sol = solve_optimal_lp(market, types)
    _dump({"allocation": sol.allocation.tolist(), "revenue": sol.revenue, "pivots": sol.pivots})
    return 0


def cmd_experiment(args) -> int:
    if (args.config is None) == (args.preset is None):
        raise SystemExit("give exactly one of --config or --preset")
    if args.config:
        config, sweep = load_config(args.config)
    else:
        config, sweep = preset(args.preset), None
    if sweep:
        table = run_sweep(config, sweep["axis"], sweep["values"])
    else:
        table = run_experiment(config)
    table.write_csv(args.out)
    for trial, mech, rev, bound in table.dominance_violations:
        logging.warning("trial %d: %s revenue %.12g above LP %.12g", trial, mech, rev, bound)
    return 0


def cmd_plot_data(args) -> int:
    table = ExperimentTable.read_csv(args.inp)
    mechs = args.mechanisms.split(",") if args.mechanisms else None
    written = emit_plot_data(table, args.axis, args.out, mechs)
    _dump({m: str(p) for m, p in written.items()})
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="autobid", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("run-auction", help="run the truthful rank-score auction")
    s.add_argument("--market", required=True)
    s.add_argument("--ranks", required=True)
    s.add_argument("--report-types", help="types JSON to report instead of the true ones")
    s.set_defaults(func=cmd_run_auction)

    s = sub.add_parser("verify", help="check one bidder's value grid against the feasibility conditions")
    s.add_argument("--market", required=True)
    s.add_argument("--ranks", required=True)
    s.add_argument("--bidder", type=int, default=0)
    s.add_argument("--b-grid", type=parse_grid, default=parse_grid("0:10:101"))
    s.add_argument("--r-grid", type=parse_grid, default=parse_grid("0.25:5:101"))
    s.add_argument("--tol", type=float, default=1e-9)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("best-response", help="best-response ROI dynamics in sequential auctions")
    s.add_argument("--market", required=True)
    s.add_argument("--form", choices=("fp", "sp"), default="fp")
    s.add_argument("--max-rounds", type=int, default=100)
    s.set_defaults(func=cmd_best_response)

    s = sub.add_parser("lp-opt", help="optimal offline revenue")
    s.add_argument("--market", required=True)
    s.set_defaults(func=cmd_lp_opt)

    s = sub.add_parser("experiment", help="run a multi-trial experiment and write its CSV")
    s.add_argument("--config")
    s.add_argument("--preset")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_experiment)

    s = sub.add_parser("plot-data", help="aggregate an experiment CSV into per-mechanism series")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--axis", choices=sorted(AXES), required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--mechanisms", help="comma-separated subset")
    s.set_defaults(func=cmd_plot_data)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
