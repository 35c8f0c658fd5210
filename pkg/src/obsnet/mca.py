"""Multiround combinatorial allocation over the bottom-up coordination framework.

Level 1: an affected resource auctions tasks to its communicable neighbours.
Level 2: its planning center auctions what is left to all of its resources.
Level 3: the center auctions the rest to peer centers, each of which answers
with a composite bid assembled from an internal auction.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, List, Optional, Sequence, Set, Tuple

from .bidding import Bundle
from .feasibility import travel_distance
from .model import PlanningCenter, Task, TaskState
from .protocol import (
    AuctionParams,
    CenterBidder,
    ContractType,
    ResourceBidder,
    announce,
    award,
    collect_bids,
    execute_contract,
)
from .world import World


@dataclass(frozen=True)
class MCAParams:
    auction: AuctionParams = AuctionParams()
    max_auctions_per_level: int = 10
    max_followups: int = 50
    arrival_start_level: int = 1


@dataclass
class RoundOutcome:
    level: int
    tenderer_id: str
    allocated: Set[str]
    remaining: Set[str]
    contracts: List[str] = field(default_factory=list)
    evicted: List[Tuple[str, str]] = field(default_factory=list)


@dataclass
class MCAResult:
    assigned: Set[str] = field(default_factory=set)
    unassigned: Set[str] = field(default_factory=set)
    rounds: List[RoundOutcome] = field(default_factory=list)
    level_ms: List[float] = field(default_factory=lambda: [0.0, 0.0, 0.0])
    evicted: Set[str] = field(default_factory=set)


class DisturbanceKind(str, Enum):
    RESOURCE_FAILURE = "resource_failure"
    WEATHER_BLACKOUT = "weather_blackout"
    TASK_ARRIVAL = "task_arrival"
    TASK_CHANGE = "task_change"


@dataclass
class DisturbanceEvent:
    time: int
    kind: DisturbanceKind
    payload: dict

    def to_dict(self) -> dict:
        payload = dict(self.payload)
        if "tasks" in payload:
            payload["tasks"] = [t.to_dict() if isinstance(t, Task) else t for t in payload["tasks"]]
        if isinstance(payload.get("task"), Task):
            payload["task"] = payload["task"].to_dict()
        return {"time": self.time, "kind": self.kind.value, "payload": payload}

    @classmethod
    def from_dict(cls, d: dict) -> "DisturbanceEvent":
        payload = dict(d["payload"])
        if "tasks" in payload:
            payload["tasks"] = [Task.from_dict(t) for t in payload["tasks"]]
        if "task" in payload:
            payload["task"] = Task.from_dict(payload["task"])
        return cls(int(d["time"]), DisturbanceKind(d["kind"]), payload)


@dataclass
class ReplanRequest:
    tasks: List[str]
    initiator: str


# --------------------------------------------------------------------------- #

def _auction_level(world: World, level: int, tenderer: str, bidders: Sequence,
                   remaining: Set[str], params: MCAParams, result: MCAResult) -> Set[str]:
    ctype = {1: ContractType.NEIGHBOR_ROUND, 2: ContractType.CENTER_ROUND,
             3: ContractType.INTER_CENTER_ROUND}[level]
    ap = params.auction
    outcome = RoundOutcome(level, tenderer, set(), set(remaining))
    for _ in range(params.max_auctions_per_level):
        if not remaining or not bidders:
            break
        deadline = min(world.clock + ap.negotiation_budget_s, world.horizon_s)
        doc = announce(world, tenderer, [world.tasks[t] for t in sorted(remaining)], ctype,
                       deadline, ap.weights)
        gt, vt, bids = collect_bids(world, doc, bidders, ap)
        contract, _ = award(world, doc, gt, vt, bids, ap)
        delta = execute_contract(world, contract, level, "mca")
        outcome.contracts.append(contract.contract_id)
        got = delta.assigned_ids
        if not got:
            break
        remaining = remaining - got
        outcome.allocated |= got
        outcome.evicted.extend(delta.evicted)
        result.evicted |= {t for t, _ in delta.evicted}
    outcome.remaining = set(remaining)
    result.rounds.append(outcome)
    world.trace.emit("round", outcome.contracts[-1] if outcome.contracts else None, world.clock, {
        "level": level, "tenderer": tenderer, "allocated": sorted(outcome.allocated),
        "remaining": sorted(outcome.remaining),
    })
    return remaining


def center_composite_bid(world: World, center: PlanningCenter, tasks: Sequence[Task],
                         params: AuctionParams) -> Bundle:
    """Internal auction over the center's own resources, offered upward as one bid.

    The internal award is tentative: nothing is committed here. Winners only
    execute if the inter-center award selects this composite.
    """
    bidders = [ResourceBidder(r.id, r.latency_s) for r in world.live_resources(center.resource_ids)]
    if not bidders or not tasks:
        return Bundle(center.id)
    deadline = min(world.clock + params.negotiation_budget_s, world.horizon_s)
    doc = announce(world, center.id, list(tasks), ContractType.CENTER_ROUND, deadline, params.weights)
    gt, vt, bids = collect_bids(world, doc, bidders, params)
    contract, _ = award(world, doc, gt, vt, bids, params)
    if not contract.bundles:
        return Bundle(center.id)
    items = [it for b in contract.bundles for it in b.items]
    return Bundle(center.id, items, sum(b.price for b in contract.bundles),
                  parts=list(zip(contract.winners, contract.bundles)))


def _episode(world: World, tasks: Set[str], initiator: str, params: MCAParams,
             result: MCAResult) -> Set[str]:
    remaining = set(tasks)
    if initiator in world.resources:
        res = world.resources[initiator]
        center = world.centers[res.center_id]
        neighbours = [world.resources[n] for n in sorted(res.neighbors)]
        neighbours = [n for n in neighbours if not n.failed]
        if neighbours and not res.failed:
            t0 = time.perf_counter()
            remaining = _auction_level(world, 1, initiator,
                                       [ResourceBidder(n.id, n.latency_s) for n in neighbours],
                                       remaining, params, result)
            result.level_ms[0] += (time.perf_counter() - t0) * 1000
    else:
        center = world.centers[initiator]

    if remaining:
        t0 = time.perf_counter()
        bidders = [ResourceBidder(r.id, r.latency_s) for r in world.live_resources(center.resource_ids)]
        remaining = _auction_level(world, 2, center.id, bidders, remaining, params, result)
        result.level_ms[1] += (time.perf_counter() - t0) * 1000

    if remaining:
        t0 = time.perf_counter()
        peers = [CenterBidder(p) for p in sorted(world.centers) if p != center.id]
        remaining = _auction_level(world, 3, center.id, peers, remaining, params, result)
        result.level_ms[2] += (time.perf_counter() - t0) * 1000
    return remaining


def run_mca(world: World, tasks: Sequence[str], initiator: str,
            params: MCAParams = MCAParams()) -> MCAResult:
    """Allocate ``tasks`` bottom-up starting from ``initiator``.

    Tasks displaced from a resource's route while executing contracts are
    replanned afterwards in follow-up episodes started by that resource.
    """
    if not tasks:
        raise ValueError("run_mca needs a nonempty task set")
    result = MCAResult()
    requested = set(tasks)
    _episode(world, requested, initiator, params, result)

    followups = 0
    handled: Set[str] = set()
    while followups < params.max_followups:
        placed = world.assignment_of()
        orphans: Dict[str, List[str]] = {}
        for out in result.rounds:
            for tid, rid in out.evicted:
                if tid not in placed and tid not in handled:
                    orphans.setdefault(rid, []).append(tid)
        if not orphans:
            break
        rid = sorted(orphans)[0]
        batch = set(orphans[rid])
        handled |= batch
        followups += 1
        initiator_id = rid if not world.resources[rid].failed else world.resources[rid].center_id
        _episode(world, batch, initiator_id, params, result)

    placed = world.assignment_of()
    touched = requested | result.evicted
    result.assigned = {t for t in touched if t in placed}
    result.unassigned = touched - result.assigned
    return result


# --------------------------------------------------------------------------- #
# Disturbances

def arrival_initiator(world: World, task_ids: Sequence[str], start_level: int = 1) -> str:
    xs = [world.tasks[t].location[0] for t in task_ids]
    ys = [world.tasks[t].location[1] for t in task_ids]
    centroid = (sum(xs) / len(xs), sum(ys) / len(ys))
    rid = world.nearest_resource(centroid)
    if rid is None:
        raise ValueError("no live resource can initiate replanning")
    return rid if start_level <= 1 else world.resources[rid].center_id


def handle_disturbance(world: World, event: DisturbanceEvent,
                       start_level: int = 1) -> List[ReplanRequest]:
    """Apply an event to ``world`` and return the replanning episodes it triggers."""
    if event.time < world.clock:
        raise ValueError(f"event at {event.time} precedes the clock {world.clock}")
    if event.time > world.horizon_s:
        raise ValueError(f"event at {event.time} lies beyond the horizon")
    world.advance(event.time)
    p = event.payload
    kind = event.kind

    if kind is DisturbanceKind.RESOURCE_FAILURE:
        rid = p["resource_id"]
        if rid not in world.resources:
            raise KeyError(f"unknown resource {rid}")
        res = world.resources[rid]
        lost = [s.task_id for s in res.pending()]
        for tid in lost:
            world.reclaim(rid, tid, why="resource_failure")
        res.failed = True
        world.recompute_neighbors()
        return [ReplanRequest(sorted(lost), res.center_id)] if lost else []

    if kind is DisturbanceKind.WEATHER_BLACKOUT:
        x0, y0, x1, y1 = p["region"]
        t0, t1 = p["interval"]
        by_resource: Dict[str, List[str]] = {}
        for rid in world.resource_ids():
            for s in world.resources[rid].pending():
                x, y = world.tasks[s.task_id].location
                if x0 <= x <= x1 and y0 <= y <= y1 and s.exec_start < t1 and s.exec_end > t0:
                    by_resource.setdefault(rid, []).append(s.task_id)
        requests = []
        for rid in sorted(by_resource):
            kept = []
            for tid in by_resource[rid]:
                world.reclaim(rid, tid, why="weather_blackout")
                task = world.tasks[tid]
                # Clouds: the task can only be observed after the blackout clears.
                if task.window_start < t1:
                    if t1 + task.required_duration <= task.window_end:
                        world.tasks[tid] = replace(task, window_start=t1)
                        kept.append(tid)
                else:
                    kept.append(tid)
            if kept:
                requests.append(ReplanRequest(sorted(kept), rid))
        return requests

    if kind is DisturbanceKind.TASK_ARRIVAL:
        new = p["tasks"]
        ids = []
        for t in new:
            if t.id in world.tasks:
                raise ValueError(f"task {t.id} already exists")
            ids.append(t.id)
        world.add_tasks(new)
        if not ids:
            return []
        return [ReplanRequest(sorted(ids), arrival_initiator(world, ids, start_level))]

    if kind is DisturbanceKind.TASK_CHANGE:
        task: Task = p["task"]
        if task.id not in world.tasks:
            raise KeyError(f"unknown task {task.id}")
        holder = world.assignment_of().get(task.id)
        if holder is not None and holder.state is not TaskState.PENDING:
            world.tasks[task.id] = task
            return []
        initiator = None
        if holder is not None:
            world.reclaim(holder.resource_id, task.id, why="task_change")
            initiator = holder.resource_id
        world.tasks[task.id] = task
        if initiator is None:
            initiator = arrival_initiator(world, [task.id], start_level)
        return [ReplanRequest([task.id], initiator)]

    raise ValueError(f"unknown disturbance kind {kind}")
