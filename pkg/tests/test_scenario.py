import json
from dataclasses import replace

import pytest

from obsnet.model import ResourceKind, validate_scenario
from obsnet.scenario import (
    SCHEMA_VERSION,
    FULL,
    SMALL,
    Scenario,
    ScenarioConfig,
    ScenarioError,
    dumps,
    generate_dynamic,
    generate_static,
    load,
    load_events,
    save,
    save_events,
)


def test_full_profile_counts():
    sc = generate_static(replace(FULL, seed=1))
    assert len(sc.centers) == 4
    assert [len(c.resource_ids) for c in sc.centers] == [2, 25, 28, 9]
    assert len(sc.resources) == 64
    assert len(sc.tasks) == 600


def test_round_robin_capabilities():
    sc = generate_static(replace(FULL, task_count=0))
    uavs = [r for r in sc.resources if r.center_id == "p2"]
    assert [u.cruise_speed for u in uavs[:4]] == [90.0, 60.0, 90.0, 60.0]
    assert [u.initial_endurance for u in uavs[:4]] == [21.0, 30.0, 21.0, 30.0]
    assert [u.visible_width for u in uavs[:2]] == [500.0, 600.0]
    sats = [r for r in sc.resources if r.kind is ResourceKind.SATELLITE]
    assert [s.visible_width for s in sats] == [8200.0, 5000.0]
    assert [s.side_swing_angle for s in sats] == [30.0, 25.0]


def test_empty_task_set_is_valid():
    sc = generate_static(replace(SMALL, task_count=0))
    assert sc.tasks == [] and sc.validate() == []


def test_tasks_respect_ranges():
    sc = generate_static(replace(FULL, seed=5))
    for t in sc.tasks:
        assert 0 <= t.weight <= 1
        assert 0 <= t.window_start < t.window_end <= 21600
        assert 0 <= t.location[0] <= 200 and 0 <= t.location[1] <= 200
    assert sc.validate() == []


def test_same_seed_same_bytes(tmp_path):
    save(generate_static(replace(SMALL, task_count=30, seed=9)), tmp_path / "a.json")
    save(generate_static(replace(SMALL, task_count=30, seed=9)), tmp_path / "b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    save(generate_static(replace(SMALL, task_count=30, seed=10)), tmp_path / "c.json")
    assert (tmp_path / "a.json").read_bytes() != (tmp_path / "c.json").read_bytes()


def test_save_load_round_trip(tmp_path):
    sc = generate_static(replace(SMALL, task_count=25, seed=2))
    save(sc, tmp_path / "s.json")
    back = load(tmp_path / "s.json")
    assert back.to_dict() == sc.to_dict()


def test_truncated_file_reports_position(tmp_path):
    sc = generate_static(replace(SMALL, task_count=5))
    text = dumps(sc.to_dict())
    (tmp_path / "s.json").write_text(text[: len(text) // 2])
    with pytest.raises(ScenarioError, match="line"):
        load(tmp_path / "s.json")


def test_missing_field_reports_name(tmp_path):
    d = generate_static(replace(SMALL, task_count=5)).to_dict()
    del d["tasks"][0]["weight"]
    (tmp_path / "s.json").write_text(json.dumps(d))
    with pytest.raises(ScenarioError, match="weight"):
        load(tmp_path / "s.json")


def test_unknown_schema_version_refused(tmp_path):
    d = generate_static(replace(SMALL, task_count=5)).to_dict()
    d["schema_version"] = SCHEMA_VERSION + 1
    (tmp_path / "s.json").write_text(json.dumps(d))
    with pytest.raises(ScenarioError, match="schema_version"):
        load(tmp_path / "s.json")


def test_small_dynamic_shape():
    sc, events = generate_dynamic(replace(SMALL, seed=4))
    assert [len(c.resource_ids) for c in sc.centers] == [1, 9, 9, 3]
    assert len(sc.tasks) == 40
    assert len(events) == 6
    times = [e.time for e in events]
    assert times == sorted(times) and len(set(times)) == 6
    gaps = {b - a for a, b in zip([0] + times, times)}
    assert len(gaps) == 1  # evenly spaced
    seen = {t.id for t in sc.tasks}
    for e in events:
        new = e.payload["tasks"]
        assert 30 <= len(new) <= 50
        assert all(t.window_start >= e.time for t in new)
        assert seen.isdisjoint(t.id for t in new)
        seen |= {t.id for t in new}
    all_tasks = sc.tasks + [t for e in events for t in e.payload["tasks"]]
    assert validate_scenario(all_tasks, sc.centers, sc.resources) == []


def test_events_round_trip(tmp_path):
    _, events = generate_dynamic(replace(SMALL, seed=1))
    save_events(events, tmp_path / "e.json")
    back = load_events(tmp_path / "e.json")
    assert [e.to_dict() for e in back] == [e.to_dict() for e in events]


@pytest.mark.parametrize("bad", [
    dict(centers=((ResourceKind.UAV, -1),)),
    dict(window_len_s=(0, 10)),
    dict(task_count=-3),
    dict(injection_size=(50, 30)),
])
def test_invalid_config_rejected(bad):
    with pytest.raises(ScenarioError):
        generate_static(replace(SMALL, **bad))


def test_generated_scenarios_validate_across_seeds():
    for seed in range(6):
        assert generate_static(replace(SMALL, task_count=80, seed=seed)).validate() == []
