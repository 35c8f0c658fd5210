"""Mutable simulation state: resources with their schedules, tasks and the clock."""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Set, Tuple

from .feasibility import (
    PassModel,
    anchor,
    can_insert,
    commit_insertion,
    copy_resource,
    remove_pending,
    replay_feasible,
    travel_distance,
)
from .model import (
    AllocationScheme,
    PlanningCenter,
    Point,
    Provenance,
    Resource,
    ScheduledTask,
    Task,
    TaskState,
)
from .trace import Trace


@dataclass
class World:
    horizon_s: int
    region_km: Tuple[float, float]
    centers: Dict[str, PlanningCenter]
    resources: Dict[str, Resource]
    tasks: Dict[str, Task] = field(default_factory=dict)
    seed: int = 0
    pass_model: PassModel = PassModel()
    comm_radius_km: float = 30.0
    clock: int = 0
    trace: Trace = field(default_factory=lambda: Trace("off"))
    contract_counter: int = 0
    executed_contracts: Set[str] = field(default_factory=set)
    provenance: Dict[str, Provenance] = field(default_factory=dict)

    def clone(self, trace: Optional[Trace] = None) -> "World":
        other = copy.copy(self)
        other.centers = {k: copy.deepcopy(c) for k, c in self.centers.items()}
        other.resources = {k: copy_resource(r) for k, r in self.resources.items()}
        other.tasks = dict(self.tasks)
        other.executed_contracts = set(self.executed_contracts)
        other.provenance = dict(self.provenance)
        other.trace = trace if trace is not None else Trace("off")
        return other

    # ------------------------------------------------------------------ #
    def add_tasks(self, tasks: Iterable[Task]) -> None:
        for t in tasks:
            self.tasks[t.id] = t

    def resource_ids(self) -> List[str]:
        return sorted(self.resources)

    def center_of(self, resource_id: str) -> PlanningCenter:
        return self.centers[self.resources[resource_id].center_id]

    def live_resources(self, ids: Optional[Iterable[str]] = None) -> List[Resource]:
        ids = sorted(ids) if ids is not None else self.resource_ids()
        return [self.resources[i] for i in ids if not self.resources[i].failed]

    def current_position(self, res: Resource) -> Point:
        return anchor(res, self.tasks)[0]

    def recompute_neighbors(self) -> None:
        """Same-center resources within the communication radius can talk."""
        pos = {rid: self.current_position(r) for rid, r in self.resources.items()}
        for rid, r in self.resources.items():
            r.neighbors = {
                oid for oid, o in self.resources.items()
                if oid != rid and o.center_id == r.center_id and not o.failed
                and travel_distance(pos[rid], pos[oid]) <= self.comm_radius_km
            }

    def nearest_resource(self, point: Point) -> Optional[str]:
        best = None
        for r in self.live_resources():
            d = travel_distance(self.current_position(r), point)
            if best is None or (d, r.id) < best:
                best = (d, r.id)
        return None if best is None else best[1]

    def next_contract_id(self) -> str:
        self.contract_counter += 1
        return f"c{self.contract_counter:06d}"

    # ------------------------------------------------------------------ #
    def advance(self, t: int) -> None:
        """Move the clock forward; observations that have begun are frozen."""
        if t < self.clock:
            raise ValueError(f"cannot move clock backwards from {self.clock} to {t}")
        self.clock = t
        for r in self.resources.values():
            r.available_from = t
            for s in r.schedule:
                if s.state is TaskState.PENDING and s.exec_start < t:
                    s.state = TaskState.DONE if s.exec_end <= t else TaskState.EXECUTING
                elif s.state is TaskState.EXECUTING and s.exec_end <= t:
                    s.state = TaskState.DONE
        self.recompute_neighbors()

    def assignment_of(self) -> Dict[str, ScheduledTask]:
        out = {}
        for r in self.resources.values():
            for s in r.active():
                out[s.task_id] = s
        return out

    # ------------------------------------------------------------------ #
    def insert(self, resource_id: str, task_id: str, contract_id: Optional[str] = None,
               provenance: Optional[Provenance] = None) -> Optional[ScheduledTask]:
        """Best-position insertion with budget charging; None when infeasible."""
        res = self.resources[resource_id]
        task = self.tasks[task_id]
        result = can_insert(res, task, self.tasks, self.pass_model)
        if not result.feasible:
            return None
        entry = commit_insertion(res, task, result)
        if provenance is not None:
            self.provenance[task_id] = provenance
        self.trace.emit("commit", contract_id, self.clock, {
            "resource": resource_id, "task": task_id, "start": entry.exec_start,
            "end": entry.exec_end, "distance_delta": result.added_distance,
        })
        return entry

    def reclaim(self, resource_id: str, task_id: str, contract_id: Optional[str] = None,
                why: str = "reclaimed") -> ScheduledTask:
        res = self.resources[resource_id]
        before = res.endurance_remaining
        entry = remove_pending(res, task_id, self.tasks)
        self.provenance.pop(task_id, None)
        self.trace.emit("reclaim", contract_id, self.clock, {
            "resource": resource_id, "task": task_id, "why": why,
            "distance_delta": (before - res.endurance_remaining) if res.is_mobile else 0.0,
        })
        return entry

    def reclaim_all_pending(self, resource_ids: Optional[Iterable[str]] = None) -> List[str]:
        ids = sorted(resource_ids) if resource_ids is not None else self.resource_ids()
        out = []
        for rid in ids:
            for s in list(self.resources[rid].pending()):
                self.reclaim(rid, s.task_id, why="global_replan")
                out.append(s.task_id)
        return out

    # ------------------------------------------------------------------ #
    def scheme(self, task_ids: Optional[Iterable[str]] = None) -> AllocationScheme:
        wanted = set(self.tasks) if task_ids is None else set(task_ids)
        assigned = [s for s in self.assignment_of().values() if s.task_id in wanted]
        assigned.sort(key=lambda s: s.task_id)
        done = {s.task_id for s in assigned}
        return AllocationScheme(
            assignments=[copy.copy(s) for s in assigned],
            unassigned=wanted - done,
            provenance={t: self.provenance[t] for t in done if t in self.provenance},
        )

    def audit(self) -> List[str]:
        """Conservation and feasibility problems across every resource."""
        problems = []
        seen: Dict[str, str] = {}
        for rid in self.resource_ids():
            res = self.resources[rid]
            for s in res.active():
                if s.task_id in seen:
                    problems.append(f"task {s.task_id} assigned to {seen[s.task_id]} and {rid}")
                seen[s.task_id] = rid
                if s.resource_id != rid:
                    problems.append(f"entry {s.task_id} on {rid} claims resource {s.resource_id}")
            problems.extend(replay_feasible(res, self.tasks, self.pass_model))
        return problems

    def total_flight_km(self) -> float:
        total = 0.0
        for r in self.resources.values():
            if r.is_mobile and not math.isinf(r.initial_endurance):
                total += r.initial_endurance - r.endurance_remaining
        return total
