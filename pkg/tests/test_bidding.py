import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from obsnet.bidding import (
    Bundle,
    BundleItem,
    bid_order,
    build_bundle,
    bundle_price,
    conflict_degrees,
    consumption_degree,
    replay_bundle,
)
from obsnet.feasibility import can_insert, commit_insertion
from obsnet.model import BidWeights

from builders import task, uav
from oracles import consumption_ref, price_ref


# Conflict degree -----------------------------------------------------------------

def test_conflict_degree_hand_values():
    assert conflict_degrees([1.0, 0.5]) == [1.0, 0.5]
    assert conflict_degrees([0, 0, 0]) == [0.0, 0.0, 0.0]
    assert conflict_degrees([0.3]) == [1.0]
    assert conflict_degrees([]) == []


def test_conflict_degree_rejects_negative():
    with pytest.raises(ValueError):
        conflict_degrees([-0.1, 1.0])


@settings(max_examples=100, deadline=None)
# Conflict weights are sums of task weights, so either 0 or well away from underflow.
@given(st.lists(st.one_of(st.just(0.0), st.floats(1e-6, 10)), min_size=1, max_size=8),
       st.floats(0.01, 100))
def test_conflict_degree_scale_invariant(sw, c):
    a = conflict_degrees(sw)
    b = conflict_degrees([x * c for x in sw])
    assert a == pytest.approx(b, abs=1e-9)
    assert all(0.0 <= g <= 1.0 for g in a)


# Consumption degree --------------------------------------------------------------

def test_consumption_degree_hand_value():
    # Ratios 0.5, 0.25, 0.25: ((1/3) * 1.0)^2.
    f = consumption_degree(50, 100, 1, 4, 2.5, 10.0)
    assert f == pytest.approx(1 / 9, abs=1e-12)
    assert f == pytest.approx(consumption_ref(0.5, 0.25, 0.25), abs=1e-12)


def test_consumption_degree_zero_and_overflow():
    assert consumption_degree(0, 100, 0, 4, 0.0, 10.0) == 0.0
    assert consumption_degree(150, 100, 1, 4, 1.0, 10.0) == 1.0
    assert consumption_degree(10, 100, 1, 4, 11.0, 10.0) == 1.0


def test_consumption_degree_zero_budgets():
    # 0/0 contributes nothing; positive demand on an empty budget saturates.
    assert consumption_degree(0, 0, 1, 2, 0.0, 0.0) == pytest.approx((0.5 / 3) ** 2)
    assert consumption_degree(10, 0, 1, 2, 0.0, 0.0) == 1.0


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_consumption_degree_matches_formula(a, b, c):
    f = consumption_degree(a * 100, 100, b * 8, 8, c * 30, 30)
    assert f == pytest.approx(consumption_ref(a, b, c), abs=1e-12)
    assert 0.0 <= f <= 1.0


# Bundle price --------------------------------------------------------------------

def _item(g, f):
    return BundleItem("t", [], 0.0, g, 0, 0, 0.0, f, None)


def test_bundle_price_hand_values():
    assert bundle_price([_item(0.2, 0.1)]) == pytest.approx(0.85, abs=1e-12)
    assert bundle_price([_item(1.0, 1.0)]) == 0.0
    assert bundle_price([]) == 0.0


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), max_size=6),
       st.floats(0, 1), st.floats(0, 1))
def test_bundle_price_matches_formula(pairs, l1, l2):
    w = BidWeights(lambda1=l1, lambda2=l2)
    items = [_item(g, f) for g, f in pairs]
    v = bundle_price(items, w)
    assert v == pytest.approx(price_ref(pairs, l1, l2), abs=1e-9)
    assert -1e-12 <= v <= len(pairs) * (l1 + l2) + 1e-12


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=1, max_size=5),
       st.integers(0, 4), st.floats(0, 1))
def test_price_monotone_in_g_and_f(pairs, idx, cut):
    idx %= len(pairs)
    base = bundle_price([_item(g, f) for g, f in pairs])
    g, f = pairs[idx]
    lower_g = list(pairs)
    lower_g[idx] = (g * cut, f)
    lower_f = list(pairs)
    lower_f[idx] = (g, f * cut)
    assert bundle_price([_item(*p) for p in lower_g]) >= base - 1e-12
    assert bundle_price([_item(*p) for p in lower_f]) >= base - 1e-12


# Bundles ----------------------------------------------------------------------

def test_single_feasible_task_bundle():
    t = task("t1", 3, 4)
    b = build_bundle(uav("u1"), [t], {"t1": t})
    assert b.task_ids == {"t1"} and b.is_bid
    item = b.items[0]
    assert item.g == 0.0 and item.sw == 0.0
    # D=20/3000, R=1/15, cd=5/100.
    assert item.f == pytest.approx(consumption_ref(20 / 3000, 1 / 15, 5 / 100), abs=1e-12)
    assert b.price == pytest.approx(0.5 + 0.5 * (1 - item.f), abs=1e-12)


def test_mutually_exclusive_tasks_keep_heavier():
    a = task("a", 20, 0, start=1200, end=1230, dur=30, weight=0.4)
    b = task("b", 0, 20, start=1200, end=1230, dur=30, weight=0.8)
    b_ = build_bundle(uav("u1"), [a, b], {"a": a, "b": b})
    assert b_.task_ids == {"b"}


def test_no_insertable_task_is_no_bid():
    t = task("t", 150, 150)
    b = build_bundle(uav("u1", mileage=10), [t], {"t": t})
    assert not b.is_bid and b.price == 0.0 and b.items == []


def test_five_announced_budget_for_three():
    ts = [task(f"t{i}", i + 1, 0, weight=w, dur=20)
          for i, w in enumerate([0.3, 0.9, 0.5, 0.7, 0.1])]
    tasks = {t.id: t for t in ts}
    u = uav("u1", duration=60)
    b = build_bundle(u, ts, tasks)
    # Greedy replay by hand: weight order t1, t3, t2 fill the 60 s budget.
    assert [it.task_id for it in b.items] == ["t1", "t3", "t2"]
    assert [t.id for t in bid_order(ts)][:3] == ["t1", "t3", "t2"]
    assert u.schedule == []  # the bidder's own schedule is untouched
    assert replay_bundle(u, b, tasks) is not None


def test_price_equals_item_sum():
    rng = random.Random(2)
    ts = [task(f"t{i}", rng.uniform(0, 30), rng.uniform(0, 30), weight=rng.random())
          for i in range(8)]
    tasks = {t.id: t for t in ts}
    b = build_bundle(uav("u1", mileage=60), ts, tasks)
    assert b.price == pytest.approx(sum(0.5 * (1 - i.g) + 0.5 * (1 - i.f) for i in b.items), abs=1e-9)
    for i in b.items:
        assert i.sw == pytest.approx(sum(i.conflict_weights))


def test_displacement_feeds_conflict_degree():
    light = task("light", 5, 5, start=1000, end=1030, dur=30, weight=0.2)
    heavy = task("heavy", 5, 5, start=1000, end=1030, dur=30, weight=0.9)
    tasks = {"light": light, "heavy": heavy}
    u = uav("u1")
    commit_insertion(u, light, can_insert(u, light, tasks))
    b = build_bundle(u, [heavy], tasks)
    (item,) = b.items
    assert item.displaced == ("light",)
    assert item.conflict_weights == [0.2] and item.g == 1.0
    assert not build_bundle(u, [heavy], tasks, allow_displacement=False).is_bid
    # A victim heavier than half the newcomer is kept.
    assert not build_bundle(u, [heavy], tasks, displacement_ratio=0.1).is_bid


def test_random_bundles_replay_cleanly():
    rng = random.Random(8)
    for _ in range(60):
        ts = [task(f"t{i}", rng.uniform(0, 40), rng.uniform(0, 40), weight=rng.random(),
                   start=(s := rng.randint(0, 8000)), end=s + rng.randint(600, 6000),
                   dur=rng.randint(10, 40)) for i in range(10)]
        tasks = {t.id: t for t in ts}
        u = uav("u1", 20, 20, mileage=rng.uniform(10, 80), duration=rng.randint(40, 300),
                poweron=rng.randint(1, 6))
        for t in ts[:3]:
            r = can_insert(u, t, tasks)
            if r.feasible:
                commit_insertion(u, t, r)
        b = build_bundle(u, ts[3:], tasks)
        assert replay_bundle(u, b, tasks) is not None
        assert all(0 <= i.g <= 1 and 0 <= i.f <= 1 for i in b.items)
