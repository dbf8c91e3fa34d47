"""Command-line front end.

Subcommands: gen (synthesize a pool directory), run (execute an
experiment), metrics (CAR/PAR sweeps over a finished run), bounds
(theoretical cost envelopes for a pool), analyze (cost correlation table),
stats (flow-statistic cache). All outputs are plot-ready CSVs with floats
at six decimals; identical inputs produce identical bytes.

Exit codes: 0 success, 1 runtime failure, 2 bad config/usage, 3 data that
fails validation.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from . import config as config_mod
from . import flowproxy, metrics, runner
from .costing import OverheadModel, theoretical_cost_bounds
from .errors import (
    ConfigError,
    ContinuityError,
    DomainError,
    EmptyCurveError,
    GenError,
    LineFormatError,
    ManifestError,
    MissingRasterError,
    NameFormatError,
    SeqalError,
    ShapeError,
)
from .pool import load_pool, write_pool
from .synth import generate_pool

_VALIDATION_ERRORS = (
    NameFormatError,
    LineFormatError,
    ManifestError,
    ContinuityError,
    GenError,
    ShapeError,
    MissingRasterError,
    DomainError,
)


def _cmd_gen(args: argparse.Namespace) -> None:
    parser = config_mod.read_config(args.config)
    cfg = config_mod.gen_config(parser)
    pool = generate_pool(cfg)
    write_pool(pool, args.out)


def _parse_seeds(raw: str | None) -> tuple[int, ...] | None:
    if raw is None:
        return None
    try:
        seeds = tuple(int(p.strip()) for p in raw.split(",") if p.strip())
    except ValueError:
        raise ConfigError(f"bad --seed list: {raw!r}")
    if not seeds:
        raise ConfigError("empty --seed list")
    return seeds


def _cmd_run(args: argparse.Namespace) -> None:
    parser = config_mod.read_config(args.config)
    cfg = config_mod.run_config(
        parser,
        strategy_override=args.strategy,
        seeds_override=_parse_seeds(args.seed),
    )
    runner.run_experiment(cfg, out_dir=args.out)


def _float_list(raw: str, flag: str) -> list[float]:
    try:
        values = [float(p.strip()) for p in raw.split(",") if p.strip()]
    except ValueError:
        raise ConfigError(f"bad {flag} list: {raw!r}")
    if not values:
        raise ConfigError(f"empty {flag} list")
    return values


def _read_curves(run_dir: Path) -> dict[int, metrics.PerfCostCurve]:
    """Per-seed performance-cost curves from a run's records.csv."""
    records_path = run_dir / "records.csv"
    staged: dict[int, list[tuple[float, float]]] = {}
    with open(records_path, newline="") as fh:
        for row in csv.DictReader(fh):
            if not row["map50"]:
                continue
            staged.setdefault(int(row["seed"]), []).append(
                (float(row["cum_cost_hours"]), float(row["map50"]))
            )
    if not staged:
        raise EmptyCurveError(f"{records_path} holds no evaluated rounds")
    return {
        seed: metrics.PerfCostCurve.from_points(points)
        for seed, points in sorted(staged.items())
    }


def _cmd_metrics(args: argparse.Namespace) -> None:
    run_dir = Path(args.run)
    out_dir = Path(args.out) if args.out else run_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    curves = _read_curves(run_dir)
    car_budgets = _float_list(args.car_budgets, "--car-budgets")
    par_budgets = _float_list(args.par_budgets, "--par-budgets")
    with open(out_dir / "car_sweep.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["seed", "budget_hours", "car"])
        for seed, curve in curves.items():
            for budget in car_budgets:
                writer.writerow(
                    [seed, "%.6f" % budget, "%.6f" % metrics.car(curve, budget)]
                )
    with open(out_dir / "par_sweep.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["seed", "budget_map", "par"])
        for seed, curve in curves.items():
            for budget in par_budgets:
                writer.writerow(
                    [seed, "%.6f" % budget, "%.6f" % metrics.par(curve, budget)]
                )


def _cmd_bounds(args: argparse.Namespace) -> None:
    pool = load_pool(args.pool)
    costs = [pool.sequences[s].meta.cost_hours for s in pool.train_ids]
    lower, upper = theoretical_cost_bounds(costs, args.rounds)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bound"] + [f"round_{i + 1}" for i in range(args.rounds)])
        writer.writerow(["lower"] + ["%.6f" % v for v in lower])
        writer.writerow(["upper"] + ["%.6f" % v for v in upper])


def _cmd_analyze(args: argparse.Namespace) -> None:
    pool = load_pool(args.pool)
    ids = sorted(pool.sequences)
    for sid in ids:
        flowproxy.compute_flow_stats(pool.sequences[sid])
    costs = [pool.sequences[s].meta.cost_hours for s in ids]

    def column(getter) -> list[float]:
        return [float(getter(pool.sequences[s])) for s in ids]

    pairs = {
        "cost_vs_length": column(lambda q: q.n_frames),
        "cost_vs_total_boxes": column(lambda q: q.total_boxes()),
        "cost_vs_occluded": column(lambda q: q.occluded_boxes()),
        "cost_vs_mean_motion": column(
            lambda q: sum(q.motion_scores) / q.n_frames
        ),
        "cost_vs_mean_box_estimate": column(
            lambda q: sum(q.box_estimates) / q.n_frames
        ),
        "cost_vs_season": column(lambda q: int(q.meta.season)),
        "cost_vs_time_of_day": column(lambda q: int(q.meta.time_of_day)),
    }
    report = metrics.CorrelationReport(
        entries={
            name: metrics.correlations(costs, values)
            for name, values in pairs.items()
        }
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    metrics.write_correlation_csv(report, out)


def _cmd_stats(args: argparse.Namespace) -> None:
    pool = load_pool(args.pool)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for sid in sorted(pool.sequences):
        stats = flowproxy.compute_flow_stats(
            pool.sequences[sid], args.threshold, args.min_area
        )
        flowproxy.write_flow_cache(stats, sid, out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seqal",
        description="Cost-aware sequence acquisition simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic pool directory")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("run", help="run an acquisition experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", help="comma-separated seed override")
    p.add_argument("--strategy", help="strategy kind override")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("metrics", help="CAR/PAR sweeps for a finished run")
    p.add_argument("--run", required=True)
    p.add_argument("--car-budgets", required=True)
    p.add_argument("--par-budgets", required=True)
    p.add_argument("--out", help="output directory (default: the run directory)")
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("bounds", help="theoretical cost envelopes for a pool")
    p.add_argument("--pool", required=True)
    p.add_argument("--rounds", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("analyze", help="cost correlation table for a pool")
    p.add_argument("--pool", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("stats", help="write a flow-statistic cache for a pool")
    p.add_argument("--pool", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threshold", type=int, default=flowproxy.DEFAULT_THRESHOLD)
    p.add_argument("--min-area", type=int, default=flowproxy.DEFAULT_MIN_AREA)
    p.set_defaults(func=_cmd_stats)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except _VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (SeqalError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
