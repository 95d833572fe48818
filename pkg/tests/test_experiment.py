import json


import pandas as pd


from curloc.runner.config import load_config
from curloc.runner.experiment import (
    MANIFEST_FILE,
    SUMMARY_FILE,
    SWEEP_SUMMARY_FILE,
    TRACE_FILE,
    read_summary,
    run_experiment,
    run_seed,
    run_sweep,
    seed_dir,
)
from curloc.runner.traces import TRACE_COLUMNS, read_trace
from curloc.utils.logging import EVENTS_FILE_NAME


def test_run_writes_artifacts(small_config, tmp_path):
    summaries = run_experiment(small_config)
    out = tmp_path / "runs"

    manifest = json.loads((out / MANIFEST_FILE).read_text())
    assert manifest["name"] == "small"
    assert manifest["seeds"] == [0, 1]
    assert manifest["config"]["steps"] == 40
    assert "code_version" in manifest
    assert "created_at" in manifest

    for summary in summaries:
        directory = seed_dir(out, summary.seed)
        trace = read_trace(directory / TRACE_FILE)
        assert [row.step for row in trace] == list(range(40))
        assert read_summary(directory / SUMMARY_FILE) == summary
        assert summary.updates == sum(row.updated for row in trace)
        assert set(summary.trained) == {"a50", "a80", "map"}
        assert summary.final_policy["step_count"] == 40

    header = (seed_dir(out, 0) / TRACE_FILE).read_text().splitlines()[0]
    assert header.split(",") == TRACE_COLUMNS


def test_window_metrics_empty_while_filling(small_config, tmp_path):
    run_experiment(small_config.model_copy(update={"seeds": [0]}))
    df = pd.read_csv(tmp_path / "runs" / "seed_0" / TRACE_FILE)
    assert df["window_mean_reward"].iloc[:9].isna().all()
    # a refresh after an update empties the window again
    updates = df.index[df["updated"] == 1]
    filled = df.iloc[9 : updates[0] + 1 if len(updates) else None]
    assert filled["window_mean_reward"].notna().all()


def test_zero_steps(small_config, tmp_path):
    config = small_config.model_copy(update={"steps": 0, "seeds": [0]})
    (summary,) = run_experiment(config)
    assert summary.updates == 0
    assert summary.final_tau == 0.3
    assert summary.final_mean_iou is None
    assert summary.zero_shot == summary.trained
    assert summary.final_policy["step_count"] == 0
    assert summary.final_policy["mean"] == summary.final_policy["ref_mean"]
    trace = tmp_path / "runs" / "seed_0" / TRACE_FILE
    assert trace.read_text().strip().split(",") == TRACE_COLUMNS


def test_rerun_is_byte_identical(small_config, tmp_path):
    run_experiment(small_config)
    first = (tmp_path / "runs" / "seed_1" / TRACE_FILE).read_bytes()

    rerun = load_config(
        tmp_path / "runs" / MANIFEST_FILE,
        {"out_dir": str(tmp_path / "again")},
    )
    assert rerun.model_dump(exclude={"out_dir"}) == small_config.model_dump(
        exclude={"out_dir"}
    )
    run_experiment(rerun)
    second = (tmp_path / "again" / "seed_1" / TRACE_FILE).read_bytes()
    assert first == second


def test_workers_match_serial(small_config, tmp_path):
    serial = run_experiment(small_config)
    parallel = run_experiment(
        small_config.model_copy(update={"out_dir": str(tmp_path / "par")}),
        workers=2,
    )
    assert serial == parallel
    for seed in small_config.seeds:
        serial_trace = seed_dir(tmp_path / "runs", seed) / TRACE_FILE
        parallel_trace = seed_dir(tmp_path / "par", seed) / TRACE_FILE
        assert serial_trace.read_bytes() == parallel_trace.read_bytes()


def test_events_log(small_config, tmp_path):
    config = small_config.model_copy(update={"steps": 120})
    summaries = run_experiment(config)
    lines = (tmp_path / "runs" / EVENTS_FILE_NAME).read_text().splitlines()

    assert "small started" in lines[0]
    updates = [line for line in lines if "tau=" in line and "->" in line]
    assert len(updates) == sum(s.updates for s in summaries)
    finished = [line for line in lines if "finished" in line]
    assert len(finished) == 2


def test_run_seed_matches_experiment(small_config):
    (summary,) = run_experiment(small_config.model_copy(update={"seeds": [1]}))
    assert run_seed(small_config, 1) == summary


def test_sweep(small_config, tmp_path):
    base = small_config.model_copy(update={"steps": 20, "seeds": [0]})
    summary = run_sweep("group_size", base)

    assert list(summary["variant"]) == ["g4", "g6", "g8", "g10"]
    for variant in summary["variant"]:
        assert (tmp_path / "runs" / variant / MANIFEST_FILE).exists()
        assert (tmp_path / "runs" / variant / "seed_0" / TRACE_FILE).exists()

    written = pd.read_csv(tmp_path / "runs" / SWEEP_SUMMARY_FILE)
    assert list(written["variant"]) == list(summary["variant"])
    assert (written["seeds"] == 1).all()
