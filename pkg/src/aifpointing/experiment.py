"""Batch experiments and their analyses.

The 18-target task set, movement-time extraction, outlier filtering, the
Shannon-form difficulty regression, end-point statistics per target width,
reaction-time estimation for human traces, and single-parameter sweeps.

Analyses are pure functions of trial records; running them never mutates a
record. Trial grids run in parallel across (target, rep) with one RNG stream
per trial derived from (master seed, trial index), so results do not depend
on the worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .agent import TrialRecord, run_trial
from .config import RunConfig, build_agent_config, build_task, set_parameter

# Target table: position/width in px around the start at 900 px. Position
# 1750 corrects an obvious misprint (its row is listed with the 850 px
# distance group and a 5.44 bit difficulty, which only 1750 satisfies).
_TARGET_TABLE = [
    (1, 675.0, 20.0),
    (2, 363.0, 20.0),
    (3, 50.0, 20.0),
    (4, 1125.0, 20.0),
    (5, 1438.0, 20.0),
    (6, 1750.0, 20.0),
    (7, 675.0, 60.0),
    (8, 363.0, 60.0),
    (9, 50.0, 60.0),
    (10, 1125.0, 60.0),
    (11, 1438.0, 60.0),
    (12, 1750.0, 60.0),
    (13, 675.0, 100.0),
    (14, 363.0, 100.0),
    (15, 50.0, 100.0),
    (16, 1125.0, 100.0),
    (17, 1438.0, 100.0),
    (18, 1750.0, 100.0),
]

START_PX = 900.0
WIDTHS_PX = (20.0, 60.0, 100.0)


def index_of_difficulty(distance_px: float, width_px: float) -> float:
    """Shannon-form index of difficulty in bits."""
    if width_px <= 0:
        raise ValueError("width must be > 0")
    if distance_px < 0:
        raise ValueError("distance must be >= 0")
    return math.log2(1.0 + distance_px / width_px)


@dataclass(frozen=True)
class TargetSpec:
    id: int
    position_px: float
    width_px: float

    @property
    def distance_px(self) -> float:
        return abs(self.position_px - START_PX)

    @property
    def id_bits(self) -> float:
        return index_of_difficulty(self.distance_px, self.width_px)


def target_set() -> list[TargetSpec]:
    """The 18 pointing targets: 3 distances x 3 widths x both sides."""
    return [TargetSpec(i, p, w) for i, p, w in _TARGET_TABLE]


def target_by_id(target_id: int) -> TargetSpec:
    for t in target_set():
        if t.id == target_id:
            return t
    raise KeyError(f"unknown target id {target_id}")


def movement_time(trial: TrialRecord) -> float | None:
    """Seconds from target appearance to the correct click; None on timeout.

    A hit trial ends at the correct click, so its recorded duration is
    exactly hit_step * dt.
    """
    if trial.hit_step is None:
        return None
    return trial.duration_s


@dataclass(frozen=True)
class FittsFit:
    intercept: float
    slope: float
    r2: float
    n: int

    def predict(self, id_bits: float) -> float:
        return self.intercept + self.slope * id_bits


def fitts_fit(points) -> FittsFit:
    """Ordinary least squares of movement time on index of difficulty.

    ``points`` is an iterable of (id_bits, mt_s) pairs; at least two distinct
    difficulty values are required.
    """
    pts = np.asarray(list(points), dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise ValueError("need at least two (id, mt) points")
    x, y = pts[:, 0], pts[:, 1]
    if np.ptp(x) == 0:
        raise ValueError("degenerate design: all difficulties identical")
    b, a = np.polyfit(x, y, 1)
    resid = y - (a + b * x)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 if ss_tot == 0 else 1.0 - float(np.sum(resid**2) / ss_tot)
    return FittsFit(intercept=float(a), slope=float(b), r2=max(0.0, min(1.0, r2)), n=len(x))


def outlier_filter(values, n_std: float = 3.0):
    """Single-pass removal of entries whose key is > n_std stds from the mean.

    ``values`` is a list of (key, payload) pairs or plain numbers. Returns
    the surviving entries in order.
    """
    items = list(values)
    if len(items) < 2:
        return items
    keys = np.array([v[0] if isinstance(v, tuple) else v for v in items], dtype=float)
    std = keys.std(ddof=1)
    if std == 0:
        return items
    mean = keys.mean()
    return [v for v, key in zip(items, keys) if abs(key - mean) <= n_std * std]


@dataclass(frozen=True)
class EndpointStats:
    per_target: dict  # target id -> (n, mean_px, std_px)
    per_width: dict  # width px -> mean of per-target stds

    def width_stds(self, widths=WIDTHS_PX) -> list[float]:
        return [self.per_width[w] for w in widths]


def endpoint_stats(trials_with_targets) -> EndpointStats:
    """End-point spread per target and averaged per width (hits only).

    ``trials_with_targets`` is an iterable of (TargetSpec, TrialRecord).
    """
    by_target: dict[int, list[float]] = {}
    widths: dict[int, float] = {}
    for target, trial in trials_with_targets:
        end = trial.endpoint_px()
        if end is None:
            continue
        by_target.setdefault(target.id, []).append(end)
        widths[target.id] = target.width_px
    per_target = {}
    for tid, ends in sorted(by_target.items()):
        arr = np.array(ends)
        std = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
        per_target[tid] = (len(arr), float(arr.mean()), std)
    per_width: dict[float, float] = {}
    for width in sorted(set(widths.values())):
        stds = [per_target[tid][2] for tid in per_target if widths[tid] == width]
        if stds:
            per_width[width] = float(np.mean(stds))
    return EndpointStats(per_target=per_target, per_width=per_width)


def reaction_time(times_s, positions_px, threshold=10.0) -> float | None:
    """First time the finite-difference |acceleration| exceeds threshold px/s^2."""
    t = np.asarray(times_s, dtype=float)
    x = np.asarray(positions_px, dtype=float)
    if t.size < 3:
        return None
    v = np.gradient(x, t)
    a = np.gradient(v, t)
    above = np.flatnonzero(np.abs(a) > threshold)
    if above.size == 0:
        return None
    return float(t[above[0]])


# ---------------------------------------------------------------------------
# trial grids


def _run_one(args):
    run_cfg, target_id, position_px, width_px, trial_index = args
    task = build_task(run_cfg, position_px, width_px)
    agent_cfg = build_agent_config(run_cfg)
    record = run_trial(task, agent_cfg, seed=(run_cfg.master_seed, trial_index))
    record.target_id = target_id
    return trial_index, record


def run_grid(
    run_cfg: RunConfig,
    targets: list[TargetSpec] | None = None,
    reps: int | None = None,
    jobs: int = 1,
) -> list[tuple[TargetSpec, TrialRecord]]:
    """Run reps trials per target; deterministic in (config, master seed).

    Trials are indexed target-major; each uses an independent stream seeded
    by (master seed, trial index), so the worker count cannot change any
    output.
    """
    targets = list(targets) if targets is not None else target_set()
    reps = int(reps) if reps is not None else run_cfg.reps
    specs = []
    idx = 0
    for target in targets:
        for _ in range(reps):
            specs.append((run_cfg, target.id, target.position_px, target.width_px, idx))
            idx += 1
    if jobs > 1 and len(specs) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, specs, chunksize=1))
        results.sort(key=lambda pair: pair[0])
        records = [rec for _, rec in results]
    else:
        records = [_run_one(s)[1] for s in specs]
    by_id = {t.id: t for t in targets}
    return [(by_id[rec.target_id], rec) for rec in records]


def fitts_points(results, filter_outliers: bool = True) -> tuple[list[tuple[float, float]], int]:
    """Per-trial (difficulty, movement time) pairs from grid results.

    Timeout trials are excluded; returns (points, n_excluded_or_removed).
    """
    raw = []
    excluded = 0
    for target, trial in results:
        mt = movement_time(trial)
        if mt is None:
            excluded += 1
            continue
        raw.append((mt, (target.id_bits, mt)))
    if filter_outliers:
        kept = outlier_filter(raw)
        excluded += len(raw) - len(kept)
        raw = kept
    return [payload for _, payload in raw], excluded


def per_target_mean_points(points_with_ids) -> list[tuple[float, float]]:
    """Aggregate per-trial points into one mean point per difficulty value."""
    by_id: dict[float, list[float]] = {}
    for id_bits, mt in points_with_ids:
        by_id.setdefault(round(id_bits, 6), []).append(mt)
    return [(idb, float(np.mean(mts))) for idb, mts in sorted(by_id.items())]


def success_rate(results) -> float:
    trials = [trial for _, trial in results]
    if not trials:
        return 0.0
    return sum(t.hit for t in trials) / len(trials)


# ---------------------------------------------------------------------------
# parameter sweeps

SWEEP_PARAMETERS = ("damping", "horizon", "pref_misclick_std", "delay_steps")


@dataclass
class SweepCell:
    parameter: str
    value: float
    results: list
    median_mt: float | None
    success: float
    total_misclicks: int
    median_peak_speed_px: float


def sweep(
    run_cfg: RunConfig,
    parameter: str,
    values,
    target: TargetSpec,
    reps: int,
    jobs: int = 1,
) -> list[SweepCell]:
    """Re-run the same target grid while varying a single scalar parameter."""
    cells = []
    for value in values:
        cfg_v = set_parameter(run_cfg, parameter, value)
        results = run_grid(cfg_v, targets=[target], reps=reps, jobs=jobs)
        mts = [movement_time(t) for _, t in results if t.hit_step is not None]
        peaks = [float(np.max(np.abs(t.speeds_px()))) for _, t in results]
        cells.append(
            SweepCell(
                parameter=parameter,
                value=float(value),
                results=results,
                median_mt=float(np.median(mts)) if mts else None,
                success=success_rate(results),
                total_misclicks=sum(t.misclicks for _, t in results),
                median_peak_speed_px=float(np.median(peaks)) if peaks else 0.0,
            )
        )
    return cells
