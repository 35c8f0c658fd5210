"""Bundle construction and pricing for a single bidder.

A bidder offers the announced tasks it can fit, priced by how little they
conflict with its existing plan and how little of its remaining capability they
consume.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, List, Mapping, Optional, Sequence, Tuple

from .feasibility import (
    InsertionResult,
    PassModel,
    can_insert,
    commit_insertion,
    conflicting_tasks,
    copy_resource,
    remove_pending,
)
from .model import BidWeights, Resource, Task


@dataclass
class BundleItem:
    task_id: str
    conflict_weights: List[float]
    sw: float
    g: float
    d: int
    r: int
    cd: float
    f: float
    insertion: InsertionResult
    displaced: Tuple[str, ...] = ()


@dataclass
class Bundle:
    bidder_id: str
    items: List[BundleItem] = field(default_factory=list)
    price: float = 0.0
    # Members of a composite (center-level) bid: (resource id, bundle) pairs.
    parts: List[Tuple[str, "Bundle"]] = field(default_factory=list)

    @property
    def task_ids(self) -> frozenset:
        return frozenset(i.task_id for i in self.items)

    @property
    def is_bid(self) -> bool:
        return bool(self.items)


def conflict_degrees(sw: Sequence[float]) -> List[float]:
    """Normalise conflict weight sums by their maximum; all zeros stay zero."""
    if not sw:
        return []
    if any(v < 0 for v in sw):
        raise ValueError("conflict weight sums must be nonnegative")
    top = max(sw)
    if top == 0:
        return [0.0] * len(sw)
    return [v / top for v in sw]


def _ratio(demand: float, budget: float) -> Optional[float]:
    if budget == 0:
        return 0.0 if demand == 0 else None
    r = demand / budget
    return r if r <= 1.0 else None


def consumption_degree(d_ej: float, d_e: float, r_ej: float, r_e: float,
                       cd_ej: float, l_e: float, w: BidWeights = BidWeights()) -> float:
    """Squared weighted share of the remaining duration, power-on and mileage budgets.

    Any demand exceeding its budget saturates the degree at 1.
    """
    ratios = (_ratio(d_ej, d_e), _ratio(r_ej, r_e), _ratio(cd_ej, l_e))
    if any(r is None for r in ratios):
        return 1.0
    rd, rr, rl = ratios
    return (w.alpha * rd + w.beta * rr + w.gamma * rl) ** 2


def bundle_price(items: Iterable[BundleItem], w: BidWeights = BidWeights()) -> float:
    return sum(w.lambda1 * (1.0 - it.g) + w.lambda2 * (1.0 - it.f) for it in items)


def bid_order(tasks: Iterable[Task]) -> List[Task]:
    """Greedy order used by every bidder: weight desc, then window start, then id."""
    return sorted(tasks, key=lambda t: (-t.weight, t.window_start, t.id))


def build_bundle(res: Resource, announced: Iterable[Task], tasks: Mapping[str, Task],
                 w: BidWeights = BidWeights(), pass_model: PassModel = PassModel(),
                 allow_displacement: bool = True, displacement_ratio: float = 0.5) -> Bundle:
    """Greedy bundle of announced tasks ``res`` can take on.

    Tasks are tried in :func:`bid_order` against a working copy of the schedule.
    When plain insertion fails and ``allow_displacement`` is set, the bidder may
    give up pending tasks (never ones already in this bundle) whose summed
    weight is at most ``displacement_ratio`` times the new task's weight.
    Conflict weights are read from the original schedule.
    """
    work = copy_resource(res)
    raw = []
    accepted: set = set()
    for task in bid_order(announced):
        displaced: Tuple[str, ...] = ()
        result = can_insert(work, task, tasks, pass_model)
        if not result.feasible:
            if not allow_displacement:
                continue
            cap = displacement_ratio * task.weight
            victims = conflicting_tasks(work, task, tasks, pass_model,
                                        protected=frozenset(accepted), weight_cap=cap)
            if not victims:
                continue
            if sum(tasks[v].weight for v in victims) > cap:
                continue
            trial = copy_resource(work)
            for v in sorted(victims):
                remove_pending(trial, v, tasks)
            result = can_insert(trial, task, tasks, pass_model)
            if not result.feasible:  # pragma: no cover - conflicting_tasks guarantees this
                continue
            work = trial
            displaced = tuple(sorted(victims))

        f = consumption_degree(task.required_duration, work.duration_remaining, 1,
                               work.poweron_remaining,
                               result.added_distance if work.is_mobile else 0.0,
                               work.endurance_remaining if work.is_mobile else 0.0, w)
        # Until something is accepted the working copy still equals the original.
        if accepted or displaced:
            original = conflicting_tasks(res, task, tasks, pass_model)
        else:
            original = frozenset()
        weights = sorted(tasks[t].weight for t in (original or ()))
        raw.append((task, result, weights, f, displaced))
        commit_insertion(work, task, result)
        accepted.add(task.id)

    g = conflict_degrees([sum(r[2]) for r in raw])
    items = [
        BundleItem(task_id=task.id, conflict_weights=weights, sw=sum(weights), g=gj,
                   d=task.required_duration, r=1,
                   cd=result.added_distance if res.is_mobile else 0.0, f=f,
                   insertion=result, displaced=displaced)
        for (task, result, weights, f, displaced), gj in zip(raw, g)
    ]
    return Bundle(res.id, items, bundle_price(items, w))


def single_task_bid(res: Resource, task: Task, tasks: Mapping[str, Task],
                    w: BidWeights = BidWeights(), pass_model: PassModel = PassModel(),
                    allow_displacement: bool = True, displacement_ratio: float = 0.5) -> Bundle:
    return build_bundle(res, [task], tasks, w, pass_model, allow_displacement, displacement_ratio)


def replay_bundle(res: Resource, bundle: Bundle, tasks: Mapping[str, Task],
                  pass_model: PassModel = PassModel()) -> Optional[Resource]:
    """Re-apply a bundle on a copy of ``res``; None if any step is infeasible."""
    work = copy_resource(res)
    for item in bundle.items:
        for v in item.displaced:
            if not any(s.task_id == v for s in work.pending()):
                return None
            remove_pending(work, v, tasks)
        result = can_insert(work, tasks[item.task_id], tasks, pass_model)
        if not result.feasible:
            return None
        commit_insertion(work, tasks[item.task_id], result)
    return work
