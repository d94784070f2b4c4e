"""Persistence: trajectory logs, human-session ingestion, CSV emission.

Trial logs are line-delimited JSON with a versioned header line. Floats are
serialized with Python's shortest round-trip repr, so read(write(x)) == x
exactly and identical runs produce byte-identical files. Readers reject
files whose schema major version is newer than their own.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .agent import ClickEvent, StepLog, TrialRecord
from .dynamics import TaskSpec
from .experiment import target_set

TRIALS_SCHEMA = "pointclick-trials"
SESSION_SCHEMA = "pointclick-session"
SCHEMA_VERSION = "1.0"


class LogFormatError(ValueError):
    """Malformed or incompatible log content, with a line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


def _check_version(header: dict, schema: str, line: int = 1) -> None:
    if header.get("schema") != schema:
        raise LogFormatError(f"expected schema {schema!r}, got {header.get('schema')!r}", line)
    version = str(header.get("version", ""))
    major = version.split(".")[0]
    ours = SCHEMA_VERSION.split(".")[0]
    if not major.isdigit() or int(major) > int(ours):
        raise LogFormatError(f"unsupported schema version {version!r}", line)


def _state_px(state, task: TaskSpec) -> list[float]:
    # Position and velocity rescale by the task factor; button displacements
    # are unitless and pass through.
    return [
        float(state[0] * task.scale + task.start_px),
        float(state[1] * task.scale),
        float(state[2]),
        float(state[3]),
    ]


def _trial_header_row(index: int, rec: TrialRecord, config_hash: str | None) -> dict:
    row = {
        "type": "trial",
        "trial": index,
        "seed": list(rec.seed) if isinstance(rec.seed, tuple) else rec.seed,
        "target_id": rec.target_id,
        "task": {
            "target_px": rec.task.target_px,
            "width_px": rec.task.width_px,
            "canvas_px": rec.task.canvas_px,
            "start_px": rec.task.start_px,
            "scale": rec.task.scale,
        },
        "outcome": rec.outcome,
        "hit_step": rec.hit_step,
        "duration_s": rec.duration_s,
        "misclicks": rec.misclicks,
        "clicks": [[c.step, c.position_px, int(c.hit)] for c in rec.clicks],
        "vi_divergences": rec.vi_divergences,
    }
    if config_hash is not None:
        row["config_hash"] = config_hash
    return row


def _step_row(index: int, rec: TrialRecord, row: StepLog) -> dict:
    return {
        "type": "step",
        "trial": index,
        "step": row.step,
        "t": row.t,
        "state": [float(x) for x in row.state],
        "state_px": _state_px(row.state, rec.task),
        "action": [float(x) for x in row.action],
        "obs": None if row.observation is None else [float(x) for x in row.observation],
        "belief_mean": [float(x) for x in row.belief_mean],
        "belief_var": [float(x) for x in row.belief_var],
        "predicted_mean": [float(x) for x in row.predicted_mean],
        "predicted_var": [float(x) for x in row.predicted_var],
        "event": row.event,
    }


def write_log(path: str | Path, records: list[TrialRecord], config_hash: str | None = None) -> None:
    """Write trial records as JSONL with a versioned header."""
    lines = [json.dumps({"schema": TRIALS_SCHEMA, "version": SCHEMA_VERSION}, sort_keys=True)]
    for index, rec in enumerate(records):
        lines.append(json.dumps(_trial_header_row(index, rec, config_hash), sort_keys=True))
        for row in rec.steps:
            lines.append(json.dumps(_step_row(index, rec, row), sort_keys=True))
    Path(path).write_text("\n".join(lines) + "\n")


def read_log(path: str | Path) -> list[TrialRecord]:
    """Read trial records back; lossless inverse of write_log."""
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise LogFormatError("empty file", 1)
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as err:
        raise LogFormatError(f"bad header: {err}", 1) from None
    _check_version(header, TRIALS_SCHEMA)

    records: dict[int, TrialRecord] = {}
    for lineno, text in enumerate(lines[1:], start=2):
        if not text.strip():
            continue
        try:
            row = json.loads(text)
        except json.JSONDecodeError as err:
            raise LogFormatError(f"malformed row: {err}", lineno) from None
        kind = row.get("type")
        if kind == "trial":
            task = TaskSpec(**row["task"])
            seed = row["seed"]
            rec = TrialRecord(
                task=task,
                seed=tuple(seed) if isinstance(seed, list) else seed,
                outcome=row["outcome"],
                hit_step=row["hit_step"],
                duration_s=row["duration_s"],
                misclicks=row["misclicks"],
                clicks=[ClickEvent(int(s), float(x), bool(h)) for s, x, h in row["clicks"]],
                vi_divergences=row.get("vi_divergences", 0),
                target_id=row.get("target_id"),
            )
            records[row["trial"]] = rec
        elif kind == "step":
            try:
                rec = records[row["trial"]]
            except KeyError:
                raise LogFormatError(f"step row for unknown trial {row.get('trial')}", lineno)
            rec.steps.append(
                StepLog(
                    step=row["step"],
                    t=row["t"],
                    state=np.array(row["state"]),
                    action=np.array(row["action"]),
                    observation=None if row["obs"] is None else np.array(row["obs"]),
                    belief_mean=np.array(row["belief_mean"]),
                    belief_var=np.array(row["belief_var"]),
                    predicted_mean=np.array(row["predicted_mean"]),
                    predicted_var=np.array(row["predicted_var"]),
                    event=row["event"],
                )
            )
        else:
            raise LogFormatError(f"unknown row type {kind!r}", lineno)
    return [records[i] for i in sorted(records)]


def write_csv(path: str | Path, header: list[str], rows) -> None:
    """Minimal deterministic CSV writer (full-precision floats)."""

    def cell(v) -> str:
        if v is None:
            return ""
        if isinstance(v, float):  # includes numpy scalars; repr of the builtin round-trips
            return repr(float(v))
        return str(v)

    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(cell(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# human recorder ingestion


@dataclass
class HumanTrial:
    participant: str
    target_id: int
    target_px: float
    width_px: float
    times_s: np.ndarray
    positions_px: np.ndarray
    raw_times_s: np.ndarray
    raw_positions_px: np.ndarray
    clicks: list[tuple[float, float, bool]]  # (t_s, x_px, correct)
    misclicks: int = 0

    @property
    def movement_time(self) -> float | None:
        correct = [t for t, _, ok in self.clicks if ok]
        return correct[0] if correct else None

    @property
    def endpoint_px(self) -> float | None:
        correct = [(t, x) for t, x, ok in self.clicks if ok]
        return correct[0][1] if correct else None


@dataclass
class RejectedTrial:
    index: int
    reason: str


def _resample(t: np.ndarray, x: np.ndarray, dt: float):
    """Linear interpolation onto the dt grid, keeping the exact endpoints."""
    grid = np.arange(0.0, t[-1], dt)
    if grid.size == 0 or grid[-1] < t[-1]:
        grid = np.append(grid, t[-1])
    return grid, np.interp(grid, t, x)


def ingest_human(path: str | Path, dt: float = 0.02):
    """Parse a recorder session export into per-trial human logs.

    Validates target ids against the task table and timestamp monotonicity;
    rejected trials are reported, not fatal. Cursor traces are resampled to
    the dt grid for comparison against simulated trials.
    """
    raw = json.loads(Path(path).read_text())
    _check_version(raw, SESSION_SCHEMA)
    session = raw.get("session", {})
    participant = str(session.get("participant", "anonymous"))
    targets = {t.id: t for t in target_set()}

    trials: list[HumanTrial] = []
    rejected: list[RejectedTrial] = []
    for index, entry in enumerate(raw.get("trials", [])):
        tid = entry.get("target_id")
        if tid not in targets:
            rejected.append(RejectedTrial(index, f"unknown target id {tid!r}"))
            continue
        spec = targets[tid]
        samples = np.asarray(entry.get("samples", []), dtype=float)
        if samples.ndim != 2 or samples.shape[0] < 2 or samples.shape[1] < 2:
            rejected.append(RejectedTrial(index, "too few pointer samples"))
            continue
        t_ms, x_px = samples[:, 0], samples[:, 1]
        if np.any(np.diff(t_ms) <= 0):
            rejected.append(RejectedTrial(index, "non-monotone timestamps"))
            continue
        declared = (entry.get("target_px"), entry.get("width_px"))
        if declared != (None, None) and declared != (spec.position_px, spec.width_px):
            rejected.append(RejectedTrial(index, "target geometry does not match table"))
            continue
        t_s = (t_ms - t_ms[0]) / 1000.0
        clicks = []
        half = spec.width_px / 2.0
        for click in entry.get("clicks", []):
            ct_ms, cx = float(click[0]), float(click[1])
            correct = bool(click[-1]) if len(click) > 2 else abs(cx - spec.position_px) <= half
            clicks.append(((ct_ms - t_ms[0]) / 1000.0, cx, correct))
        grid, resampled = _resample(t_s, x_px, dt)
        trials.append(
            HumanTrial(
                participant=participant,
                target_id=tid,
                target_px=spec.position_px,
                width_px=spec.width_px,
                times_s=grid,
                positions_px=resampled,
                raw_times_s=t_s,
                raw_positions_px=x_px,
                clicks=clicks,
                misclicks=sum(1 for _, _, ok in clicks if not ok),
            )
        )
    return trials, rejected


def write_human_log(path: str | Path, trials: list[HumanTrial]) -> None:
    """Canonical JSONL form of ingested human trials."""
    lines = [json.dumps({"schema": "pointclick-human", "version": SCHEMA_VERSION}, sort_keys=True)]
    for i, tr in enumerate(trials):
        lines.append(
            json.dumps(
                {
                    "trial": i,
                    "participant": tr.participant,
                    "target_id": tr.target_id,
                    "target_px": tr.target_px,
                    "width_px": tr.width_px,
                    "times_s": [float(v) for v in tr.times_s],
                    "positions_px": [float(v) for v in tr.positions_px],
                    "clicks": [[float(t), float(x), int(ok)] for t, x, ok in tr.clicks],
                },
                sort_keys=True,
            )
        )
    Path(path).write_text("\n".join(lines) + "\n")
