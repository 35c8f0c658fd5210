"""Domain types shared by every module: tasks, resources, centers, schedules."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Set, Tuple

Point = Tuple[float, float]

DEFAULT_HORIZON_S = 21600
DEFAULT_REGION_KM = (200.0, 200.0)


class Band(str, Enum):
    OPTICAL = "optical"
    INFRARED = "infrared"
    SAR = "sar"


class ResourceKind(str, Enum):
    SATELLITE = "satellite"
    UAV = "uav"
    AIRSHIP = "airship"


class TaskState(str, Enum):
    PENDING = "pending"
    EXECUTING = "executing"
    DONE = "done"
    RECLAIMED = "reclaimed"


@dataclass(frozen=True)
class Task:
    id: str
    location: Point
    weight: float
    window_start: int
    window_end: int
    required_duration: int
    required_resolution: float = 10.0
    required_band: Band = Band.OPTICAL

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "location": list(self.location),
            "weight": self.weight,
            "window_start": self.window_start,
            "window_end": self.window_end,
            "required_duration": self.required_duration,
            "required_resolution": self.required_resolution,
            "required_band": self.required_band.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Task":
        return cls(
            id=str(d["id"]),
            location=(float(d["location"][0]), float(d["location"][1])),
            weight=float(d["weight"]),
            window_start=int(d["window_start"]),
            window_end=int(d["window_end"]),
            required_duration=int(d["required_duration"]),
            required_resolution=float(d["required_resolution"]),
            required_band=Band(d["required_band"]),
        )


@dataclass(frozen=True)
class Pass:
    """One straight-line satellite ground-track crossing of the region.

    The sub-satellite point is at ``origin`` at time ``start`` and moves along
    the unit vector ``direction`` at the pass model's ground speed until ``end``.
    """

    start: float
    end: float
    origin: Point
    direction: Point

    def to_dict(self) -> dict:
        return {"start": self.start, "end": self.end,
                "origin": list(self.origin), "direction": list(self.direction)}

    @classmethod
    def from_dict(cls, d: dict) -> "Pass":
        return cls(float(d["start"]), float(d["end"]),
                   (float(d["origin"][0]), float(d["origin"][1])),
                   (float(d["direction"][0]), float(d["direction"][1])))


@dataclass
class ScheduledTask:
    task_id: str
    resource_id: str
    exec_start: int
    exec_end: int
    flight_distance_in: float = 0.0
    state: TaskState = TaskState.PENDING

    def to_dict(self) -> dict:
        return {"task_id": self.task_id, "resource_id": self.resource_id,
                "exec_start": self.exec_start, "exec_end": self.exec_end,
                "flight_distance_in": self.flight_distance_in, "state": self.state.value}

    @classmethod
    def from_dict(cls, d: dict) -> "ScheduledTask":
        return cls(str(d["task_id"]), str(d["resource_id"]), int(d["exec_start"]),
                   int(d["exec_end"]), float(d["flight_distance_in"]), TaskState(d["state"]))


@dataclass
class Resource:
    """An observation platform and its remaining capability budgets.

    ``endurance_remaining`` (L_e, km), ``duration_remaining`` (D_e, s) and
    ``poweron_remaining`` (R_e, count) are decremented as tasks are committed
    and restored when pending tasks are removed. The ``initial_*`` fields keep
    the horizon budgets so consumption can be audited.

    ``available_from`` is the simulation clock as seen by this resource: no new
    observation may start before it.
    """

    id: str
    kind: ResourceKind
    center_id: str
    position: Point
    cruise_speed: float = 0.0
    endurance_remaining: float = math.inf
    duration_remaining: int = 0
    poweron_remaining: int = 0
    visible_width: float = 0.0
    side_swing_angle: float = 0.0
    max_resolution: float = 1.0
    bands: frozenset = frozenset({Band.OPTICAL})
    schedule: List[ScheduledTask] = field(default_factory=list)
    neighbors: Set[str] = field(default_factory=set)
    initial_endurance: float = math.inf
    initial_duration: int = 0
    initial_poweron: int = 0
    passes: List[Pass] = field(default_factory=list)
    altitude_km: float = 500.0
    latency_s: int = 0
    available_from: int = 0
    failed: bool = False

    @property
    def is_mobile(self) -> bool:
        return self.kind is not ResourceKind.SATELLITE

    def pending(self) -> List[ScheduledTask]:
        return [s for s in self.schedule if s.state is TaskState.PENDING]

    def started(self) -> List[ScheduledTask]:
        return [s for s in self.schedule
                if s.state in (TaskState.EXECUTING, TaskState.DONE)]

    def active(self) -> List[ScheduledTask]:
        return [s for s in self.schedule if s.state is not TaskState.RECLAIMED]

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind.value,
            "center_id": self.center_id,
            "position": list(self.position),
            "cruise_speed": self.cruise_speed,
            "endurance_remaining": _enc_inf(self.endurance_remaining),
            "duration_remaining": self.duration_remaining,
            "poweron_remaining": self.poweron_remaining,
            "visible_width": self.visible_width,
            "side_swing_angle": self.side_swing_angle,
            "max_resolution": self.max_resolution,
            "bands": sorted(b.value for b in self.bands),
            "schedule": [s.to_dict() for s in self.schedule],
            "neighbors": sorted(self.neighbors),
            "initial_endurance": _enc_inf(self.initial_endurance),
            "initial_duration": self.initial_duration,
            "initial_poweron": self.initial_poweron,
            "passes": [p.to_dict() for p in self.passes],
            "altitude_km": self.altitude_km,
            "latency_s": self.latency_s,
            "available_from": self.available_from,
            "failed": self.failed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Resource":
        return cls(
            id=str(d["id"]),
            kind=ResourceKind(d["kind"]),
            center_id=str(d["center_id"]),
            position=(float(d["position"][0]), float(d["position"][1])),
            cruise_speed=float(d["cruise_speed"]),
            endurance_remaining=_dec_inf(d["endurance_remaining"]),
            duration_remaining=int(d["duration_remaining"]),
            poweron_remaining=int(d["poweron_remaining"]),
            visible_width=float(d["visible_width"]),
            side_swing_angle=float(d["side_swing_angle"]),
            max_resolution=float(d["max_resolution"]),
            bands=frozenset(Band(b) for b in d["bands"]),
            schedule=[ScheduledTask.from_dict(s) for s in d.get("schedule", [])],
            neighbors=set(d.get("neighbors", [])),
            initial_endurance=_dec_inf(d["initial_endurance"]),
            initial_duration=int(d["initial_duration"]),
            initial_poweron=int(d["initial_poweron"]),
            passes=[Pass.from_dict(p) for p in d.get("passes", [])],
            altitude_km=float(d.get("altitude_km", 500.0)),
            latency_s=int(d.get("latency_s", 0)),
            available_from=int(d.get("available_from", 0)),
            failed=bool(d.get("failed", False)),
        )


def _enc_inf(x: float) -> Optional[float]:
    return None if math.isinf(x) else x


def _dec_inf(x) -> float:
    return math.inf if x is None else float(x)


@dataclass
class PlanningCenter:
    id: str
    resource_ids: List[str]
    peer_center_ids: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"id": self.id, "resource_ids": list(self.resource_ids),
                "peer_center_ids": list(self.peer_center_ids)}

    @classmethod
    def from_dict(cls, d: dict) -> "PlanningCenter":
        return cls(str(d["id"]), [str(r) for r in d["resource_ids"]],
                   [str(p) for p in d.get("peer_center_ids", [])])


@dataclass(frozen=True)
class BidWeights:
    alpha: float = 1 / 3
    beta: float = 1 / 3
    gamma: float = 1 / 3
    lambda1: float = 0.5
    lambda2: float = 0.5

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "lambda1", "lambda2"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")


@dataclass
class Provenance:
    round: int
    method: str
    tender_id: Optional[str] = None


@dataclass
class AllocationScheme:
    assignments: List[ScheduledTask] = field(default_factory=list)
    unassigned: Set[str] = field(default_factory=set)
    provenance: Dict[str, Provenance] = field(default_factory=dict)
    value: float = 0.0

    def assigned_ids(self) -> Set[str]:
        return {a.task_id for a in self.assignments}

    def resource_of(self) -> Dict[str, str]:
        return {a.task_id: a.resource_id for a in self.assignments}

    def signature(self) -> tuple:
        """Hashable summary used for bitwise-equality comparisons between runs."""
        return (
            tuple(sorted((a.task_id, a.resource_id, a.exec_start, a.exec_end,
                          round(a.flight_distance_in, 9)) for a in self.assignments)),
            tuple(sorted(self.unassigned)),
        )


def validate_scenario(tasks, centers, resources, horizon_s: int = DEFAULT_HORIZON_S) -> List[str]:
    """Return the list of violated invariants; an empty list means valid."""
    problems: List[str] = []
    center_ids = {c.id for c in centers}
    resource_ids = {r.id for r in resources}

    seen = set()
    for t in tasks:
        if t.id in seen:
            problems.append(f"task {t.id}: duplicate id")
        seen.add(t.id)
        if not 0.0 <= t.weight <= 1.0:
            problems.append(f"task {t.id}: weight {t.weight} outside [0, 1]")
        if not t.window_start < t.window_end:
            problems.append(f"task {t.id}: window_start {t.window_start} >= window_end {t.window_end}")
        if t.window_end > horizon_s:
            problems.append(f"task {t.id}: window_end {t.window_end} beyond horizon {horizon_s}")
        if t.window_start < 0:
            problems.append(f"task {t.id}: negative window_start")
        if t.required_duration <= 0:
            problems.append(f"task {t.id}: required_duration must be positive")

    membership: Dict[str, List[str]] = {}
    for c in centers:
        if c.id in c.peer_center_ids:
            problems.append(f"center {c.id}: lists itself as a peer")
        for p in c.peer_center_ids:
            if p not in center_ids:
                problems.append(f"center {c.id}: unknown peer center {p}")
        for rid in c.resource_ids:
            membership.setdefault(rid, []).append(c.id)
            if rid not in resource_ids:
                problems.append(f"center {c.id}: unknown resource {rid}")

    by_id = {r.id: r for r in resources}
    for r in resources:
        if r.center_id not in center_ids:
            problems.append(f"resource {r.id}: references missing center {r.center_id}")
        owners = membership.get(r.id, [])
        if r.center_id in center_ids and owners != [r.center_id]:
            problems.append(f"resource {r.id}: must belong to exactly one center, found {owners}")
        if r.endurance_remaining < 0:
            problems.append(f"resource {r.id}: negative endurance_remaining")
        if r.duration_remaining < 0:
            problems.append(f"resource {r.id}: negative duration_remaining")
        if r.poweron_remaining < 0:
            problems.append(f"resource {r.id}: negative poweron_remaining")
        for n in r.neighbors:
            other = by_id.get(n)
            if other is None:
                problems.append(f"resource {r.id}: unknown neighbor {n}")
            elif other.center_id != r.center_id:
                problems.append(f"resource {r.id}: neighbor {n} belongs to another center")
        prev_end = None
        for s in r.active():
            if s.exec_end < s.exec_start:
                problems.append(f"resource {r.id}: task {s.task_id} ends before it starts")
            if prev_end is not None and s.exec_start < prev_end:
                problems.append(f"resource {r.id}: schedule not time-ordered at {s.task_id}")
            prev_end = s.exec_end
    return problems
