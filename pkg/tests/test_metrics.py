import math

import pytest

from obsnet.metrics import (
    CSV_COLUMNS,
    RunMetrics,
    aec,
    aec_from_trace,
    occupancy_rate,
    rsc,
    tcr,
    to_csv,
)
from obsnet.model import AllocationScheme, ScheduledTask
from obsnet.mca import run_mca

from builders import make_world, task, uav


def scheme(pairs):
    return AllocationScheme([ScheduledTask(t, r, 0, 1) for t, r in pairs])


def test_tcr_example():
    ids = [f"t{i}" for i in range(600)]
    s = scheme([(t, "r1") for t in ids[:570]])
    assert tcr(s, ids) == pytest.approx(0.95)


def test_tcr_empty_raises():
    with pytest.raises(ValueError):
        tcr(scheme([]), [])


def test_aec_example():
    # 120 km flown over 24 completed tasks.
    w = make_world([uav("r1", mileage=200, poweron=30)], [task(f"t{i}") for i in range(24)])
    for t in list(w.tasks):
        assert w.insert("r1", t) is not None
    w.resources["r1"].endurance_remaining = 80.0
    assert aec(w) == pytest.approx(5.0)


def test_aec_none_without_completions():
    assert aec(make_world([uav("r1")], [task("t1")])) is None


def test_rsc_example():
    old = scheme([(f"t{i}", "r1") for i in range(40)])
    moved = [(f"t{i}", "r2") for i in range(5)]
    kept = [(f"t{i}", "r1") for i in range(5, 37)]  # t37..t39 dropped
    assert rsc(old, scheme(moved + kept)) == pytest.approx(0.2)


def test_rsc_zero_when_identical_and_error_when_empty():
    s = scheme([("t1", "r1")])
    assert rsc(s, s) == 0.0
    with pytest.raises(ValueError):
        rsc(scheme([]), s)


def test_occupancy_example():
    assert occupancy_rate(["n"] * 46, ["p"] * 126) == pytest.approx(46 / 126)
    with pytest.raises(ValueError):
        occupancy_rate(["n"], [])


def test_aec_from_trace_matches_world(trace):
    tasks = [task(f"t{i}", 3 * i, 2 * i) for i in range(6)]
    w = make_world([uav("r1"), uav("r2", 10, 10)], tasks, trace=trace)
    run_mca(w, list(w.tasks), "r1")
    assert aec_from_trace(trace.lines) == pytest.approx(aec(w), abs=1e-9)


def test_aec_from_trace_needs_payloads():
    with pytest.raises(ValueError):
        aec_from_trace([{"stage": "commit", "digest": "x"}])
    assert aec_from_trace([]) is None


def test_run_metrics_validation_and_row():
    with pytest.raises(ValueError):
        RunMetrics("mca", 0, 10, 1.5)
    with pytest.raises(ValueError):
        RunMetrics("mca", 0, 10, 0.5, rsc=-0.1)
    m = RunMetrics("mca", 3, 10, 0.5, runtime_ms=1.23456, aec_km=math.nan)
    row = m.row()
    assert row["tcr"] == "0.500000" and row["runtime_ms"] == "1.235" and row["aec_km"] == ""


def test_csv_layout():
    text = to_csv([RunMetrics("ssa", 1, 5, 0.4, extra={"nt": 3})], ["nt"])
    header, line = text.strip().split("\n")
    assert header.split(",") == CSV_COLUMNS + ["nt"]
    assert line.startswith("ssa,1,5,0,0.400000,")
    assert line.endswith(",3")
