import json

import numpy as np
import pytest

from aifpointing.config import RunConfig, build_agent_config, build_task, config_hash
from aifpointing.agent import run_trial
from aifpointing.experiment import fitts_points, target_by_id
from aifpointing.logio import (
    LogFormatError,
    ingest_human,
    read_log,
    write_csv,
    write_human_log,
    write_log,
)


def records_equal(a, b) -> bool:
    if (
        a.outcome != b.outcome
        or a.hit_step != b.hit_step
        or a.seed != b.seed
        or a.duration_s != b.duration_s
        or a.misclicks != b.misclicks
        or a.task != b.task
        or a.target_id != b.target_id
        or len(a.steps) != len(b.steps)
        or a.clicks != b.clicks
    ):
        return False
    for ra, rb in zip(a.steps, b.steps):
        for field in (
            "state",
            "action",
            "belief_mean",
            "belief_var",
            "predicted_mean",
            "predicted_var",
        ):
            if not np.array_equal(getattr(ra, field), getattr(rb, field)):
                return False
        if (ra.observation is None) != (rb.observation is None):
            return False
        if ra.observation is not None and not np.array_equal(ra.observation, rb.observation):
            return False
        if (ra.step, ra.t, ra.event) != (rb.step, rb.t, rb.event):
            return False
    return True


@pytest.fixture(scope="module")
def sample_records():
    cfg = RunConfig(
        n_plans=24,
        horizon=4,
        vi_steps=6,
        vi_samples=40,
        pv_state_samples=12,
        pv_obs_samples=2,
        noise_position_std=0.004,
        noise_displacement_std=0.004,
    )
    records = []
    for i, tid in enumerate((16, 10)):
        t = target_by_id(tid)
        rec = run_trial(build_task(cfg, t.position_px, t.width_px), build_agent_config(cfg), seed=(5, i))
        rec.target_id = tid
        records.append(rec)
    return records


class TestTrialLogRoundTrip:
    def test_bit_identical_round_trip(self, sample_records, tmp_path):
        path = tmp_path / "trials.jsonl"
        write_log(path, sample_records, config_hash(RunConfig()))
        back = read_log(path)
        assert len(back) == len(sample_records)
        for a, b in zip(sample_records, back):
            assert records_equal(a, b)

    def test_reserialization_is_byte_identical(self, sample_records, tmp_path):
        p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        write_log(p1, sample_records)
        write_log(p2, read_log(p1))
        assert p1.read_bytes() == p2.read_bytes()

    def test_empty_log_readable(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        write_log(path, [])
        assert read_log(path) == []

    def test_analysis_survives_round_trip(self, sample_records, tmp_path):
        path = tmp_path / "trials.jsonl"
        write_log(path, sample_records)
        back = read_log(path)
        orig = [(target_by_id(r.target_id), r) for r in sample_records]
        loaded = [(target_by_id(r.target_id), r) for r in back]
        pts_a, _ = fitts_points(orig, filter_outliers=False)
        pts_b, _ = fitts_points(loaded, filter_outliers=False)
        assert pts_a == pts_b

    def test_newer_major_version_rejected(self, tmp_path):
        path = tmp_path / "future.jsonl"
        path.write_text('{"schema": "pointclick-trials", "version": "2.0"}\n')
        with pytest.raises(LogFormatError):
            read_log(path)

    def test_malformed_row_reports_line(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text(
            '{"schema": "pointclick-trials", "version": "1.0"}\nnot json at all\n'
        )
        with pytest.raises(LogFormatError) as err:
            read_log(path)
        assert err.value.line == 2

    def test_wrong_schema_rejected(self, tmp_path):
        path = tmp_path / "wrong.jsonl"
        path.write_text('{"schema": "something-else", "version": "1.0"}\n')
        with pytest.raises(LogFormatError):
            read_log(path)


def make_export(trials, **session_overrides):
    session = {
        "participant": "p1",
        "created_ms": 0,
        "canvas_width_px": 1800,
        "start_px": 900,
        "reps_per_target": 1,
        "order_seed": 1,
        "flags": [],
    }
    session.update(session_overrides)
    return {
        "schema": "pointclick-session",
        "version": "1.0",
        "session": session,
        "trials": trials,
    }


def synthetic_trial(target_id=16, n=30, misclick=False):
    t = target_by_id(target_id)
    times = [i * 8.0 for i in range(n)]
    xs = list(np.linspace(900.0, t.position_px, n))
    clicks = []
    if misclick:
        clicks.append([times[n // 2], t.position_px + t.width_px, 0])
    clicks.append([times[-1], t.position_px, 1])
    return {
        "target_id": target_id,
        "target_px": t.position_px,
        "width_px": t.width_px,
        "samples": [[tm, x, 0.0] for tm, x in zip(times, xs)],
        "clicks": clicks,
    }


class TestIngestHuman:
    def test_two_trials_ingested(self, tmp_path):
        path = tmp_path / "export.json"
        path.write_text(json.dumps(make_export([synthetic_trial(16), synthetic_trial(10)])))
        trials, rejected = ingest_human(path)
        assert len(trials) == 2 and not rejected
        assert trials[0].movement_time == pytest.approx(29 * 8.0 / 1000.0)

    def test_misclick_keeps_trial_alive(self, tmp_path):
        path = tmp_path / "export.json"
        path.write_text(json.dumps(make_export([synthetic_trial(16, misclick=True)])))
        trials, rejected = ingest_human(path)
        assert len(trials) == 1 and not rejected
        assert trials[0].misclicks == 1
        assert trials[0].movement_time is not None

    def test_resampling_preserves_endpoints(self, tmp_path):
        path = tmp_path / "export.json"
        path.write_text(json.dumps(make_export([synthetic_trial(16, n=23)])))
        trials, _ = ingest_human(path)
        tr = trials[0]
        assert tr.positions_px[0] == tr.raw_positions_px[0]
        assert tr.positions_px[-1] == tr.raw_positions_px[-1]
        assert tr.times_s[-1] == tr.raw_times_s[-1]

    def test_unknown_target_rejected(self, tmp_path):
        bad = synthetic_trial(16)
        bad["target_id"] = 99
        path = tmp_path / "export.json"
        path.write_text(json.dumps(make_export([bad, synthetic_trial(10)])))
        trials, rejected = ingest_human(path)
        assert len(trials) == 1
        assert len(rejected) == 1 and "target" in rejected[0].reason

    def test_non_monotone_timestamps_rejected(self, tmp_path):
        bad = synthetic_trial(16)
        bad["samples"][3][0] = bad["samples"][2][0]
        path = tmp_path / "export.json"
        path.write_text(json.dumps(make_export([bad])))
        trials, rejected = ingest_human(path)
        assert not trials
        assert rejected and "monotone" in rejected[0].reason

    def test_canonical_human_log_written(self, tmp_path):
        path = tmp_path / "export.json"
        path.write_text(json.dumps(make_export([synthetic_trial(16)])))
        trials, _ = ingest_human(path)
        out = tmp_path / "human.jsonl"
        write_human_log(out, trials)
        lines = out.read_text().splitlines()
        assert json.loads(lines[0])["schema"] == "pointclick-human"
        assert len(lines) == 2


class TestCsv:
    def test_full_precision_floats(self, tmp_path):
        path = tmp_path / "t.csv"
        write_csv(path, ["a", "b"], [(0.1 + 0.2, 1)])
        assert path.read_text() == "a,b\n0.30000000000000004,1\n"
