"""Single-task insertion feasibility, travel geometry and conflict detection.

Mobile resources (UAVs, airships) fly piecewise-straight legs between targets at
cruise speed and start each observation as early as the task window, the
arrival time and the resource clock allow. Satellites observe from synthetic
straight-line passes and only need a free slot inside a visibility window.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import FrozenSet, List, Mapping, Optional, Sequence, Tuple

from .model import Pass, Point, Resource, ResourceKind, ScheduledTask, Task, TaskState

EPS = 1e-9

# Reasons reported by can_insert, in check order.
FAILED = "resource_failed"
BAND = "band"
RESOLUTION = "resolution"
WINDOW = "window"
VISIBILITY = "visibility"
DURATION = "duration_budget"
POWERON = "poweron_budget"
MILEAGE = "mileage_budget"
TIMING = "timing"

BUDGET_REASONS = frozenset({DURATION, POWERON, MILEAGE})


@dataclass(frozen=True)
class PassModel:
    ground_speed_km_s: float = 7.5
    altitude_km: float = 500.0
    passes_per_horizon: int = 2


@dataclass(frozen=True)
class VisibilityWindow:
    resource_id: str
    task_id: str
    start: float
    end: float


@dataclass(frozen=True)
class InsertionResult:
    feasible: bool
    position: int = -1
    exec_start: int = 0
    exec_end: int = 0
    added_distance: float = 0.0
    displaced: FrozenSet[str] = frozenset()
    reason: Optional[str] = None
    # (task_id, start, end, leg_km) for every pending entry from `position` on,
    # including the inserted task, after re-timing.
    timings: Tuple[Tuple[str, int, int, float], ...] = field(default=(), repr=False)


def travel_distance(a: Point, b: Point) -> float:
    return math.hypot(b[0] - a[0], b[1] - a[1])


def travel_seconds(distance_km: float, speed_kmh: float) -> int:
    if distance_km <= 0.0:
        return 0
    if speed_kmh <= 0.0:
        return math.inf  # type: ignore[return-value]
    return int(math.ceil(distance_km / speed_kmh * 3600.0 - 1e-9))


def max_reach_km(sat: Resource, pass_model: PassModel = PassModel()) -> float:
    """Largest cross-track offset a satellite can image: half swath plus side swing."""
    altitude = sat.altitude_km if sat.altitude_km else pass_model.altitude_km
    return sat.visible_width / 2000.0 + altitude * math.tan(math.radians(sat.side_swing_angle))


def cross_track_km(p: Pass, point: Point) -> float:
    dx, dy = point[0] - p.origin[0], point[1] - p.origin[1]
    return abs(p.direction[0] * dy - p.direction[1] * dx)


def satellite_windows(sat: Resource, task: Task,
                      pass_model: PassModel = PassModel()) -> List[VisibilityWindow]:
    if sat.kind is not ResourceKind.SATELLITE:
        raise ValueError(f"satellite_windows needs a satellite, {sat.id} is a {sat.kind.value}")
    reach = max_reach_km(sat, pass_model)
    out = []
    for p in sat.passes:
        if cross_track_km(p, task.location) > reach + EPS:
            continue
        start = max(p.start, task.window_start)
        end = min(p.end, task.window_end)
        if start < end:
            out.append(VisibilityWindow(sat.id, task.id, start, end))
    return out


# --------------------------------------------------------------------------- #
# Route timing for mobile resources

def anchor(res: Resource, tasks: Mapping[str, Task]) -> Tuple[Point, int]:
    """Position and time from which the pending part of the route departs."""
    started = res.started()
    if started:
        last = started[-1]
        return tasks[last.task_id].location, last.exec_end
    return res.position, 0


def _time_suffix(res: Resource, seq: Sequence[Task], pos: Point, t: int
                 ) -> Optional[List[Tuple[str, int, int, float]]]:
    out = []
    for task in seq:
        leg = travel_distance(pos, task.location)
        arrive = t + travel_seconds(leg, res.cruise_speed)
        start = max(task.window_start, arrive, res.available_from)
        end = start + task.required_duration
        if end > task.window_end:
            return None
        out.append((task.id, start, end, leg))
        pos, t = task.location, end
    return out


def route_length(res: Resource, tasks: Mapping[str, Task]) -> float:
    """Total flight distance from the home position through every active entry."""
    if not res.is_mobile:
        return 0.0
    pos = res.position
    total = 0.0
    for s in res.active():
        loc = tasks[s.task_id].location
        total += travel_distance(pos, loc)
        pos = loc
    return total


def _static_checks(res: Resource, task: Task) -> Optional[str]:
    if res.failed:
        return FAILED
    if task.required_band not in res.bands:
        return BAND
    if task.required_resolution < res.max_resolution:
        return RESOLUTION
    if task.window_end - task.required_duration < max(task.window_start, res.available_from):
        return WINDOW
    return None


def _budget_checks(res: Resource, task: Task) -> Optional[str]:
    if task.required_duration > res.duration_remaining:
        return DURATION
    if res.poweron_remaining < 1:
        return POWERON
    return None


def can_insert(res: Resource, task: Task, tasks: Mapping[str, Task],
               pass_model: PassModel = PassModel()) -> InsertionResult:
    """Best single-task insertion into ``res``'s schedule.

    Mobile resources pick the position with the least added flight distance
    (earliest position on ties) among those keeping every window satisfied.
    Satellites take the earliest free slot inside a visibility window.
    """
    reason = _static_checks(res, task) or _budget_checks(res, task)
    if reason is not None:
        return InsertionResult(False, reason=reason)
    if res.is_mobile:
        return _insert_mobile(res, task, tasks)
    return _insert_satellite(res, task, pass_model)


def _insert_mobile(res: Resource, task: Task, tasks: Mapping[str, Task]) -> InsertionResult:
    n_started = len(res.started())
    pending = [tasks[s.task_id] for s in res.pending()]
    a_pos, a_time = anchor(res, tasks)
    base = _time_suffix(res, pending, a_pos, a_time)
    if base is None:  # pragma: no cover - schedule already broken
        return InsertionResult(False, reason=TIMING)

    nodes = [a_pos] + [t.location for t in pending]
    candidates = []
    for i in range(len(pending) + 1):
        prev = nodes[i]
        added = travel_distance(prev, task.location)
        if i < len(pending):
            nxt = nodes[i + 1]
            added += travel_distance(task.location, nxt) - travel_distance(prev, nxt)
        candidates.append((added, i))
    candidates.sort()

    any_within_mileage = False
    for added, i in candidates:
        if added > res.endurance_remaining + EPS:
            break
        any_within_mileage = True
        if i == 0:
            pos, t = a_pos, a_time
        else:
            _, _, end, _ = base[i - 1]
            pos, t = pending[i - 1].location, end
        timed = _time_suffix(res, [task] + pending[i:], pos, t)
        if timed is None:
            continue
        _, start, end, _ = timed[0]
        return InsertionResult(True, position=n_started + i, exec_start=start, exec_end=end,
                               added_distance=max(added, 0.0), timings=tuple(timed))
    return InsertionResult(False, reason=TIMING if any_within_mileage else MILEAGE)


def _insert_satellite(res: Resource, task: Task, pass_model: PassModel) -> InsertionResult:
    windows = satellite_windows(res, task, pass_model)
    if not windows:
        return InsertionResult(False, reason=VISIBILITY)
    busy = [(s.exec_start, s.exec_end) for s in res.active()]
    dur = task.required_duration
    for w in windows:
        lo = max(int(math.ceil(w.start)), res.available_from)
        hi = int(math.floor(w.end))
        starts = [lo] + [e for _, e in busy if lo <= e <= hi - dur]
        for s in sorted(set(starts)):
            if s + dur > hi:
                break
            if all(s + dur <= b0 or s >= b1 for b0, b1 in busy):
                position = sum(1 for b0, _ in busy if b0 < s)
                return InsertionResult(True, position=position, exec_start=s, exec_end=s + dur,
                                       timings=((task.id, s, s + dur, 0.0),))
    return InsertionResult(False, reason=TIMING)


# --------------------------------------------------------------------------- #
# Schedule mutation

def commit_insertion(res: Resource, task: Task, result: InsertionResult) -> ScheduledTask:
    """Apply a feasible InsertionResult to ``res`` and charge its budgets."""
    if not result.feasible:
        raise ValueError(f"cannot commit infeasible insertion of {task.id} on {res.id}")
    entry = ScheduledTask(task.id, res.id, result.exec_start, result.exec_end,
                          result.timings[0][3] if res.is_mobile else 0.0)
    res.schedule.insert(result.position, entry)
    if res.is_mobile:
        by_id = {s.task_id: s for s in res.pending()}
        for tid, start, end, leg in result.timings:
            s = by_id[tid]
            s.exec_start, s.exec_end, s.flight_distance_in = start, end, leg
        res.endurance_remaining -= result.added_distance
    res.duration_remaining -= task.required_duration
    res.poweron_remaining -= 1
    return entry


def remove_pending(res: Resource, task_id: str, tasks: Mapping[str, Task]) -> ScheduledTask:
    """Drop a pending entry, re-time the rest of the route and refund budgets."""
    idx = next((i for i, s in enumerate(res.schedule)
                if s.task_id == task_id and s.state is TaskState.PENDING), None)
    if idx is None:
        raise KeyError(f"{task_id} is not pending on {res.id}")
    before = route_length(res, tasks) if res.is_mobile else 0.0
    entry = res.schedule.pop(idx)
    entry.state = TaskState.RECLAIMED
    if res.is_mobile:
        after = route_length(res, tasks)
        res.endurance_remaining += before - after
        pending = res.pending()
        a_pos, a_time = anchor(res, tasks)
        timed = _time_suffix(res, [tasks[s.task_id] for s in pending], a_pos, a_time)
        # Removing a stop never delays the rest of the route.
        assert timed is not None
        for s, (_, start, end, leg) in zip(pending, timed):
            s.exec_start, s.exec_end, s.flight_distance_in = start, end, leg
    res.duration_remaining += tasks[task_id].required_duration
    res.poweron_remaining += 1
    return entry


def copy_resource(res: Resource) -> Resource:
    return replace(res, schedule=[replace(s) for s in res.schedule],
                   neighbors=set(res.neighbors))


# --------------------------------------------------------------------------- #
# Conflicts

INHERENTLY_INFEASIBLE = None


def _without_pending(res: Resource, tasks: Mapping[str, Task]) -> Resource:
    """Copy of ``res`` with every pending entry dropped and its budgets refunded."""
    out = copy_resource(res)
    pending = [s for s in out.schedule if s.state is TaskState.PENDING]
    if not pending:
        return out
    before = route_length(out, tasks) if out.is_mobile else 0.0
    out.schedule = [s for s in out.schedule if s.state is not TaskState.PENDING]
    if out.is_mobile:
        out.endurance_remaining += before - route_length(out, tasks)
    out.duration_remaining += sum(tasks[s.task_id].required_duration for s in pending)
    out.poweron_remaining += len(pending)
    return out


def conflicting_tasks(res: Resource, task: Task, tasks: Mapping[str, Task],
                      pass_model: PassModel = PassModel(),
                      protected: FrozenSet[str] = frozenset(),
                      weight_cap: Optional[float] = None) -> Optional[FrozenSet[str]]:
    """Pending tasks whose removal lets ``task`` be inserted on ``res``.

    Greedy: while insertion fails, drop the lowest-weight pending task (lower id
    on ties) among those implicated by the failing constraint. Budget failures
    implicate every pending task; timing and visibility failures implicate the
    ones whose execution overlaps the new task's window, or all of them if none
    do. Returns ``INHERENTLY_INFEASIBLE`` (None) when even an empty schedule
    cannot host the task, or when only protected tasks remain to drop.

    With ``weight_cap`` the search stops as soon as the removed weight exceeds
    the cap; the partial set returned then already weighs more than the cap.
    """
    result = can_insert(res, task, tasks, pass_model)
    if result.feasible:
        return frozenset()
    if result.reason in (FAILED, BAND, RESOLUTION, WINDOW):
        return INHERENTLY_INFEASIBLE

    if not can_insert(_without_pending(res, tasks), task, tasks, pass_model).feasible:
        return INHERENTLY_INFEASIBLE

    work = copy_resource(res)
    removed: List[str] = []
    dropped = 0.0
    while not result.feasible:
        if weight_cap is not None and dropped > weight_cap:
            return frozenset(removed)
        movable = [s for s in work.pending() if s.task_id not in protected]
        if not movable:
            return INHERENTLY_INFEASIBLE
        pool = movable
        if result.reason not in BUDGET_REASONS:
            overlapping = [s for s in movable
                           if s.exec_start < task.window_end and s.exec_end > task.window_start]
            pool = overlapping or movable
        victim = min(pool, key=lambda s: (tasks[s.task_id].weight, s.task_id))
        remove_pending(work, victim.task_id, tasks)
        removed.append(victim.task_id)
        dropped += tasks[victim.task_id].weight
        result = can_insert(work, task, tasks, pass_model)
    return frozenset(removed)


def replay_feasible(res: Resource, tasks: Mapping[str, Task],
                    pass_model: PassModel = PassModel()) -> List[str]:
    """Independent re-check of a resource's committed schedule.

    Rebuilds the route from scratch and reports every violated constraint:
    ordering, windows, travel times, visibility, overlaps and budget arithmetic.
    """
    problems = []
    active = res.active()
    pos, t = res.position, 0
    total_dist = 0.0
    total_dur = 0
    for i, s in enumerate(active):
        task = tasks[s.task_id]
        if s.exec_end - s.exec_start != task.required_duration:
            problems.append(f"{res.id}/{s.task_id}: execution length != required duration")
        if s.exec_start < task.window_start or s.exec_end > task.window_end:
            problems.append(f"{res.id}/{s.task_id}: execution outside task window")
        if i and s.exec_start < active[i - 1].exec_end:
            problems.append(f"{res.id}/{s.task_id}: overlaps previous entry")
        if res.is_mobile:
            leg = travel_distance(pos, task.location)
            if s.exec_start < t + travel_seconds(leg, res.cruise_speed):
                problems.append(f"{res.id}/{s.task_id}: unreachable in time")
            total_dist += leg
            pos, t = task.location, s.exec_end
        else:
            wins = satellite_windows(res, task, pass_model)
            if not any(w.start <= s.exec_start and s.exec_end <= w.end for w in wins):
                problems.append(f"{res.id}/{s.task_id}: outside every visibility window")
        total_dur += task.required_duration
    if res.is_mobile and abs((res.initial_endurance - total_dist) - res.endurance_remaining) > 1e-9:
        problems.append(f"{res.id}: mileage ledger {res.endurance_remaining} != "
                        f"{res.initial_endurance - total_dist}")
    if res.initial_duration - total_dur != res.duration_remaining:
        problems.append(f"{res.id}: duration ledger mismatch")
    if res.initial_poweron - len(active) != res.poweron_remaining:
        problems.append(f"{res.id}: power-on ledger mismatch")
    if res.endurance_remaining < -1e-6 or res.duration_remaining < 0 or res.poweron_remaining < 0:
        problems.append(f"{res.id}: negative remaining budget")
    return problems
