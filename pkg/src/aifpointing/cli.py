"""Command-line surface.

Subcommands: simulate (config -> trial logs), analyze (logs -> CSV tables),
sweep (single-parameter grids), ingest (recorder export -> canonical human
logs), compare (agent vs human summary). Exit code 0 on success, 1 on
validation failures, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import experiment, logio
from .config import config_hash, load_config, save_config, set_parameter
from .experiment import (
    endpoint_stats,
    fitts_fit,
    fitts_points,
    movement_time,
    per_target_mean_points,
    success_rate,
    sweep,
    target_by_id,
    target_set,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aifpointing",
        description="Active-inference point-and-click simulator and analysis harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run the pointing task grid and write trial logs")
    sim.add_argument("--config", default="default", help="config file (json/yaml) or 'default'")
    sim.add_argument("--seed", type=int, default=None, help="master seed (overrides config)")
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--jobs", type=int, default=1, help="parallel trial workers")
    sim.add_argument("--targets", default=None, help="comma-separated target ids (default all 18)")
    sim.add_argument("--reps", type=int, default=None, help="repetitions per target")
    sim.add_argument("--k-plans", type=int, default=None, help="override the sampled plan count")

    ana = sub.add_parser("analyze", help="Fitts/endpoint analyses of a trial log")
    ana.add_argument("logs", help="trial log file or directory containing trials.jsonl")
    ana.add_argument("--out", default=None, help="output directory (defaults next to the log)")
    ana.add_argument(
        "--per-target-means", action="store_true", help="regress on per-target mean times"
    )

    sw = sub.add_parser("sweep", help="re-run one target while varying a single parameter")
    sw.add_argument("--config", default="default")
    sw.add_argument("--param", required=True, help="e.g. damping, horizon, pref_misclick_std, tau")
    sw.add_argument("--values", required=True, help="comma-separated values")
    sw.add_argument("--target-px", type=float, default=1750.0)
    sw.add_argument("--width-px", type=float, default=30.0)
    sw.add_argument("--reps", type=int, default=10)
    sw.add_argument("--seed", type=int, default=None)
    sw.add_argument("--out", required=True)
    sw.add_argument("--jobs", type=int, default=1)

    ing = sub.add_parser("ingest", help="validate and convert a recorder session export")
    ing.add_argument("export", help="session export json")
    ing.add_argument("--out", required=True, help="output directory")

    cmp_ = sub.add_parser("compare", help="side-by-side agent vs human summary tables")
    cmp_.add_argument("--agent", required=True, help="agent trial log file or run directory")
    cmp_.add_argument("--human", required=True, help="recorder export json")
    cmp_.add_argument("--out", required=True)
    return parser


def _log_path(source: str) -> Path:
    path = Path(source)
    if path.is_dir():
        path = path / "trials.jsonl"
    return path


def _analyze_records(results, out: Path, per_target_means: bool = False) -> None:
    out.mkdir(parents=True, exist_ok=True)
    points, excluded = fitts_points(results)
    rows = []
    index = 0
    for target, trial in results:
        mt = movement_time(trial)
        if mt is None:
            continue
        rows.append((index, target.id, target.id_bits, mt))
        index += 1
    logio.write_csv(out / "fitts.csv", ["trial", "target_id", "id_bits", "mt_s"], rows)
    fit_input = per_target_mean_points(points) if per_target_means else points
    try:
        fit = fitts_fit(fit_input)
    except ValueError as err:
        print(f"skipping difficulty regression: {err}", file=sys.stderr)
    else:
        logio.write_csv(
            out / "fitts_fit.csv",
            ["a_s", "b_s_per_bit", "r2", "n_points", "n_excluded"],
            [(fit.intercept, fit.slope, fit.r2, fit.n, excluded)],
        )
    stats = endpoint_stats(results)
    logio.write_csv(
        out / "endpoints.csv",
        ["target_id", "width_px", "n_hits", "mean_px", "std_px"],
        [
            (tid, next(t.width_px for t, _ in results if t.id == tid), n, mean, std)
            for tid, (n, mean, std) in sorted(stats.per_target.items())
        ],
    )
    logio.write_csv(
        out / "endpoint_widths.csv",
        ["width_px", "avg_std_px"],
        sorted(stats.per_width.items()),
    )
    trials = [t for _, t in results]
    logio.write_csv(
        out / "summary.csv",
        ["n_trials", "success_rate", "timeouts", "total_misclicks"],
        [
            (
                len(trials),
                success_rate(results),
                sum(1 for t in trials if not t.hit),
                sum(t.misclicks for t in trials),
            )
        ],
    )


def _results_from_log(path: Path):
    records = logio.read_log(path)
    results = []
    for rec in records:
        if rec.target_id is not None:
            target = target_by_id(rec.target_id)
        else:
            target = experiment.TargetSpec(0, rec.task.target_px, rec.task.width_px)
        results.append((target, rec))
    return results


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = set_parameter(cfg, "master_seed", args.seed)
    if args.reps is not None:
        cfg = set_parameter(cfg, "reps", args.reps)
    if args.k_plans is not None:
        cfg = set_parameter(cfg, "n_plans", args.k_plans)
    targets = target_set()
    if args.targets:
        wanted = [int(t) for t in args.targets.split(",")]
        targets = [target_by_id(t) for t in wanted]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    results = experiment.run_grid(cfg, targets=targets, jobs=max(1, args.jobs))
    logio.write_log(out / "trials.jsonl", [rec for _, rec in results], config_hash(cfg))
    save_config(cfg, out / "config.json")
    hits = success_rate(results)
    print(f"{len(results)} trials -> {out / 'trials.jsonl'} (success rate {hits:.2f})")
    return 0


def cmd_analyze(args) -> int:
    path = _log_path(args.logs)
    if not path.exists():
        print(f"no trial log at {path}", file=sys.stderr)
        return 1
    results = _results_from_log(path)
    out = Path(args.out) if args.out else path.parent
    _analyze_records(results, out, args.per_target_means)
    print(f"analysis tables written to {out}")
    return 0


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = set_parameter(cfg, "master_seed", args.seed)
    values = [float(v) for v in args.values.split(",")]
    target = experiment.TargetSpec(0, args.target_px, args.width_px)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cells = sweep(cfg, args.param, values, target, reps=args.reps, jobs=max(1, args.jobs))
    summary = []
    for cell in cells:
        tag = f"{args.param}={cell.value:g}"
        cell_dir = out / tag
        cell_dir.mkdir(parents=True, exist_ok=True)
        logio.write_log(cell_dir / "trials.jsonl", [rec for _, rec in cell.results])
        summary.append(
            (
                args.param,
                cell.value,
                len(cell.results),
                cell.success,
                cell.median_mt,
                cell.total_misclicks,
                cell.median_peak_speed_px,
            )
        )
    logio.write_csv(
        out / "sweep_summary.csv",
        ["parameter", "value", "n", "success_rate", "median_mt_s", "misclicks", "median_peak_speed_px"],
        summary,
    )
    print(f"sweep tables written to {out}")
    return 0


def cmd_ingest(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        trials, rejected = logio.ingest_human(args.export)
    except (logio.LogFormatError, FileNotFoundError, ValueError) as err:
        print(f"ingest failed: {err}", file=sys.stderr)
        return 1
    logio.write_human_log(out / "human_trials.jsonl", trials)
    logio.write_csv(
        out / "rejected.csv",
        ["index", "reason"],
        [(r.index, r.reason) for r in rejected],
    )
    logio.write_csv(
        out / "human_summary.csv",
        ["trial", "target_id", "id_bits", "mt_s", "reaction_s", "misclicks"],
        [
            (
                i,
                tr.target_id,
                experiment.index_of_difficulty(abs(tr.target_px - 900.0), tr.width_px),
                tr.movement_time,
                experiment.reaction_time(tr.times_s, tr.positions_px),
                tr.misclicks,
            )
            for i, tr in enumerate(trials)
        ],
    )
    print(f"{len(trials)} trials ingested, {len(rejected)} rejected -> {out}")
    return 0


def _human_fitts_points(trials):
    pts = []
    for tr in trials:
        mt = tr.movement_time
        if mt is None:
            continue
        idb = experiment.index_of_difficulty(abs(tr.target_px - 900.0), tr.width_px)
        pts.append((mt, (idb, mt)))
    kept = experiment.outlier_filter(pts)
    return [payload for _, payload in kept]


def cmd_compare(args) -> int:
    agent_path = _log_path(args.agent)
    results = _results_from_log(agent_path)
    human_trials, rejected = logio.ingest_human(args.human)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    agent_points, _ = fitts_points(results)
    agent_fit = fitts_fit(agent_points)
    human_fit = fitts_fit(_human_fitts_points(human_trials))
    logio.write_csv(
        out / "fitts_compare.csv",
        ["source", "a_s", "b_s_per_bit", "r2", "n_points"],
        [
            ("agent", agent_fit.intercept, agent_fit.slope, agent_fit.r2, agent_fit.n),
            ("human", human_fit.intercept, human_fit.slope, human_fit.r2, human_fit.n),
        ],
    )

    agent_stats = endpoint_stats(results)
    human_stats = {}
    widths = sorted({tr.width_px for tr in human_trials})
    for width in widths:
        per_target: dict[int, list[float]] = {}
        for tr in human_trials:
            if tr.width_px == width and tr.endpoint_px is not None:
                per_target.setdefault(tr.target_id, []).append(tr.endpoint_px)
        stds = [np.std(v, ddof=1) for v in per_target.values() if len(v) > 1]
        human_stats[width] = float(np.mean(stds)) if stds else float("nan")
    logio.write_csv(
        out / "endpoint_compare.csv",
        ["width_px", "agent_std_px", "human_std_px"],
        [
            (w, agent_stats.per_width.get(w), human_stats.get(w))
            for w in sorted(set(agent_stats.per_width) | set(human_stats))
        ],
    )
    print(f"comparison tables written to {out} ({len(rejected)} human trials rejected)")
    return 0


def cli(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    handlers = {
        "simulate": cmd_simulate,
        "analyze": cmd_analyze,
        "sweep": cmd_sweep,
        "ingest": cmd_ingest,
        "compare": cmd_compare,
    }
    try:
        return handlers[args.command](args)
    except (ValueError, logio.LogFormatError, FileNotFoundError, KeyError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli())
