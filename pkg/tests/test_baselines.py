import logging

import numpy as np
import pytest

from obsnet.baselines import (
    BaselineParams,
    SizeGuardExceeded,
    kmeans,
    solve_aus,
    solve_exact_central,
    solve_ssa,
    solve_tca,
    sse,
)
from obsnet.model import ResourceKind

from builders import make_world, task, uav


def airship_world():
    # The UAV sits right on the task, the airship 40 km away on a tighter budget,
    # so the UAV quotes the higher price.
    res = [uav("r1", 0, 0), uav("a1", 40, 0, mileage=60, kind=ResourceKind.AIRSHIP)]
    return make_world(res, [task("t1", 1, 0)])


def holder(w, tid):
    return w.assignment_of()[tid].resource_id


def test_ssa_gives_task_to_best_price():
    w = airship_world()
    r = solve_ssa(w, ["t1"])
    assert r.assigned == {"t1"} and holder(w, "t1") == "r1"


def test_aus_asks_airships_first_regardless_of_price():
    w = airship_world()
    r = solve_aus(w, ["t1"])
    assert r.assigned == {"t1"} and holder(w, "t1") == "a1"


def test_aus_falls_back_to_uav():
    w = airship_world()
    w.resources["a1"].failed = True
    solve_aus(w, ["t1"])
    assert holder(w, "t1") == "r1"


def test_sequential_reports_unservable():
    w = make_world([uav("r1", mileage=5)], [task("t1", 50, 50)])
    r = solve_ssa(w, ["t1"])
    assert r.unassigned == {"t1"} and not r.assigned


def split_world():
    # Two UAVs with 12 km each; two pairs of tasks at opposite ends.
    # Oracle: only the split {t1,t2}->r1, {t3,t4}->r2 covers all four.
    tasks = [task("t1", -5, 0), task("t2", -10, 0), task("t3", 5, 0), task("t4", 10, 0)]
    return make_world([uav("r1", -1, 0, mileage=12), uav("r2", 1, 0, mileage=12)], tasks)


def test_exact_central_finds_the_full_split():
    w = split_world()
    r = solve_exact_central(w, ["t1", "t2", "t3", "t4"])
    assert r.assigned == {"t1", "t2", "t3", "t4"}
    assert {holder(w, "t1"), holder(w, "t2")} == {"r1"}
    assert {holder(w, "t3"), holder(w, "t4")} == {"r2"}
    assert w.audit() == []


def test_exact_central_size_guard():
    w = make_world([uav("r1")], [task(f"t{i}") for i in range(5)])
    with pytest.raises(SizeGuardExceeded):
        solve_exact_central(w, list(w.tasks), BaselineParams(max_tasks=4))


def _signature(w):
    return sorted((s.task_id, s.resource_id, s.exec_start) for s in w.assignment_of().values())


def test_tca_with_one_cluster_is_exact():
    a, b = split_world(), split_world()
    solve_exact_central(a, list(a.tasks))
    solve_tca(b, list(b.tasks), 1)
    assert _signature(a) == _signature(b)


def test_tca_rejects_bad_k():
    w = split_world()
    with pytest.raises(ValueError):
        solve_tca(w, list(w.tasks), 5)
    with pytest.raises(ValueError):
        solve_tca(w, list(w.tasks), 0)


def test_tca_clusters_cover_all_tasks():
    w = split_world()
    r = solve_tca(w, list(w.tasks), 2)
    assert r.assigned | r.unassigned == set(w.tasks)
    assert w.audit() == []


# k-means ------------------------------------------------------------------------

def test_kmeans_single_cluster():
    pts = np.random.default_rng(0).normal(size=(20, 2))
    assert set(kmeans(pts, 1)) == {0}


def test_kmeans_separates_two_blobs():
    rng = np.random.default_rng(1)
    a = rng.normal(0, 1, size=(15, 2))
    b = rng.normal(100, 1, size=(15, 2))
    labels = kmeans(np.vstack([a, b]), 2)
    assert len(set(labels[:15])) == 1 and len(set(labels[15:])) == 1
    assert labels[0] != labels[-1]


def test_kmeans_beats_random_assignment():
    rng = np.random.default_rng(2)
    pts = rng.uniform(0, 200, size=(60, 2))
    labels = kmeans(pts, 5, seed=3)
    rand = rng.integers(0, 5, size=60)
    assert sse(pts, labels) <= sse(pts, rand)
    assert len(set(labels)) == 5


def test_kmeans_clamps_k(caplog):
    pts = np.array([[0.0, 0.0], [1.0, 1.0]])
    with caplog.at_level(logging.WARNING):
        labels = kmeans(pts, 5)
    assert sorted(labels) == [0, 1]
    assert "exceeds" in caplog.text


def test_kmeans_errors():
    with pytest.raises(ValueError):
        kmeans(np.zeros((0, 2)), 1)
    with pytest.raises(ValueError):
        kmeans(np.zeros((3, 2)), 0)


def test_kmeans_deterministic():
    pts = np.random.default_rng(4).uniform(size=(40, 2))
    assert np.array_equal(kmeans(pts, 4, seed=9), kmeans(pts, 4, seed=9))


def test_exact_central_matches_subset_oracle():
    import itertools
    from oracles import route_timing

    # t1 only reachable by r1, t3 only by r2, t2 contested by both.
    tasks = [task("t1", -5, 0), task("t2", 10, 0), task("t3", 25, 0)]
    res = [uav("r1", 0, 0, mileage=22), uav("r2", 20, 0, mileage=22)]
    w = make_world(res, tasks)

    def can_do(r, subset):
        for perm in itertools.permutations(subset):
            route = route_timing(r.position, 0, perm, r.cruise_speed)
            if route is not None and sum(leg for *_, leg in route) <= r.endurance_remaining:
                return True
        return False

    pairs = [(r, t) for r in res for t in tasks]
    best = 0
    for mask in range(2 ** len(pairs)):
        chosen = [pairs[i] for i in range(len(pairs)) if mask >> i & 1]
        ids = [t.id for _, t in chosen]
        if len(ids) != len(set(ids)):
            continue
        if all(can_do(r, [t for rr, t in chosen if rr is r]) for r in res):
            best = max(best, len(ids))
    assert best == 3
    r = solve_exact_central(w, ["t1", "t2", "t3"])
    assert len(r.assigned) == best
    assert holder(w, "t1") == "r1" and holder(w, "t3") == "r2"


@pytest.mark.parametrize("seed", [
    pytest.param(s, marks=pytest.mark.xfail(strict=True, reason=(
        "counterexample: the per-pass price-maximal bundle for one airship "
        "strands a task that one-at-a-time insertion places"))) if s == 4 else s
    for s in range(10)
])
def test_exact_central_tcr_not_below_ssa(seed):
    from dataclasses import replace
    from obsnet.experiments import run_static
    from obsnet.scenario import SMALL, generate_static

    sc = generate_static(replace(SMALL, task_count=10, seed=seed))
    assert run_static(sc, "exact").metrics.tcr >= run_static(sc, "ssa").metrics.tcr
