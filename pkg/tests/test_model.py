import copy
from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st

from obsnet.model import (
    AllocationScheme,
    BidWeights,
    PlanningCenter,
    Resource,
    ScheduledTask,
    Task,
    validate_scenario,
)
from obsnet.scenario import FULL, generate_static

from builders import task, uav


@pytest.fixture(scope="module")
def full():
    return generate_static(replace(FULL, seed=3))


def test_full_scenario_validates_clean(full):
    assert validate_scenario(full.tasks, full.centers, full.resources) == []


def test_weight_out_of_range_is_one_violation():
    c = PlanningCenter("p1", ["u1"])
    report = validate_scenario([task("t1", weight=1.5)], [c], [uav("u1")])
    assert len(report) == 1 and "weight" in report[0]


def test_dangling_center_reference_is_one_violation():
    c = PlanningCenter("p1", [])
    report = validate_scenario([], [c], [uav("u1", center="p9")])
    assert len(report) == 1 and "missing center" in report[0]


def test_window_and_duration_checks():
    c = PlanningCenter("p1", [])
    bad = [Task("a", (0, 0), 0.5, 100, 100, 10), Task("b", (0, 0), 0.5, 0, 30000, 10),
           Task("c", (0, 0), 0.5, 0, 100, 0)]
    report = validate_scenario(bad, [c], [])
    assert len(report) == 3


def test_cross_center_neighbor_flagged():
    a, b = uav("u1", center="p1"), uav("u2", center="p2")
    a.neighbors = {"u2"}
    centers = [PlanningCenter("p1", ["u1"], ["p2"]), PlanningCenter("p2", ["u2"], ["p1"])]
    report = validate_scenario([], centers, [a, b])
    assert any("another center" in p for p in report)


def test_resource_in_two_centers_flagged():
    centers = [PlanningCenter("p1", ["u1"], ["p2"]), PlanningCenter("p2", ["u1"], ["p1"])]
    report = validate_scenario([], centers, [uav("u1")])
    assert any("exactly one center" in p for p in report)


def test_validate_is_pure_and_idempotent(full):
    before = copy.deepcopy((full.tasks, full.centers, full.resources))
    first = validate_scenario(full.tasks, full.centers, full.resources)
    second = validate_scenario(full.tasks, full.centers, full.resources)
    assert first == second
    assert (full.tasks, full.centers, full.resources) == before


def test_bid_weights_defaults_and_bounds():
    w = BidWeights()
    assert (w.alpha, w.beta, w.gamma) == pytest.approx((1 / 3,) * 3)
    assert (w.lambda1, w.lambda2) == (0.5, 0.5)
    with pytest.raises(ValueError):
        BidWeights(alpha=1.2)


@settings(max_examples=60, deadline=None)
@given(st.floats(0, 1), st.integers(0, 20000), st.integers(1, 1600), st.integers(1, 60))
def test_task_round_trip(weight, start, span, dur):
    t = Task("t", (1.5, 2.25), weight, start, start + span, dur)
    assert Task.from_dict(t.to_dict()) == t


def test_resource_round_trip_keeps_infinite_endurance(full):
    for r in full.resources:
        back = Resource.from_dict(r.to_dict())
        assert back.to_dict() == r.to_dict()


def test_scheme_signature_ignores_order():
    a = ScheduledTask("t1", "u1", 0, 10)
    b = ScheduledTask("t2", "u2", 5, 15)
    s1 = AllocationScheme([a, b], {"t3"})
    s2 = AllocationScheme([b, a], {"t3"})
    assert s1.signature() == s2.signature()
    assert s1.resource_of() == {"t1": "u1", "t2": "u2"}
