"""Static and dynamic experiment drivers shared by the CLI and the acceptance suite."""
from __future__ import annotations

import statistics
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .baselines import BaselineParams, solve_aus, solve_exact_central, solve_ssa, solve_tca
from .mca import DisturbanceEvent, MCAParams, arrival_initiator, handle_disturbance, run_mca
from .metrics import RunMetrics, aec, occupancy_rate, rsc, tcr
from .model import AllocationScheme, TaskState
from .scenario import PROFILES, Scenario, ScenarioConfig, generate_dynamic, generate_static
from .trace import Trace
from .world import World

METHODS = ("mca", "ssa", "aus", "tca", "exact")
GLOBAL_REPLAN = {"aus", "exact", "tca"}


class InvariantViolation(RuntimeError):
    """A finished run failed the conservation or feasibility audit."""


@dataclass(frozen=True)
class RunParams:
    mca: MCAParams = MCAParams()
    baseline: BaselineParams = BaselineParams()
    k: int = 10
    timing: bool = True


@dataclass
class StaticRun:
    world: World
    metrics: RunMetrics
    level_ms: Tuple[float, float, float] = (0.0, 0.0, 0.0)


def _solve(world: World, method: str, task_ids: Sequence[str], params: RunParams,
           initiator: Optional[str] = None) -> Tuple[float, Tuple[float, float, float]]:
    """Dispatch one allocation call; returns (elapsed ms, per-level ms)."""
    ids = sorted(task_ids)
    levels = (0.0, 0.0, 0.0)
    t0 = time.perf_counter()
    if not ids:
        pass
    elif method == "mca":
        who = initiator or arrival_initiator(world, ids, params.mca.arrival_start_level)
        res = run_mca(world, ids, who, params.mca)
        levels = tuple(res.level_ms)
    elif method == "ssa":
        solve_ssa(world, ids, params.baseline)
    elif method == "aus":
        solve_aus(world, ids, params.baseline)
    elif method == "exact":
        solve_exact_central(world, ids, params.baseline)
    elif method == "tca":
        solve_tca(world, ids, min(params.k, len(ids)), params.baseline)
    else:
        raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    return (time.perf_counter() - t0) * 1000.0, levels


def check(world: World) -> None:
    problems = world.audit()
    if problems:
        raise InvariantViolation("; ".join(problems[:5]))


def run_static(scenario: Scenario, method: str, params: RunParams = RunParams(),
               trace: Optional[Trace] = None, repeats: int = 1) -> StaticRun:
    """Allocate every scenario task at time zero with ``method``.

    With ``repeats`` > 1 the solve is repeated on fresh worlds and the median
    runtime is reported; the first repeat provides the world and trace.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    ids = [t.id for t in scenario.tasks]
    times, levels_all = [], []
    first: Optional[World] = None
    for i in range(max(1, repeats)):
        world = scenario.world(trace if i == 0 else None)
        ms, levels = _solve(world, method, ids, params)
        times.append(ms)
        levels_all.append(levels)
        if first is None:
            first = world
    check(first)
    scheme = first.scheme(ids)
    med = statistics.median(times) if params.timing else None
    level_ms = tuple(statistics.median(l[j] for l in levels_all) for j in range(3))
    m = RunMetrics(method, scenario.seed, len(ids), tcr(scheme, ids) if ids else 0.0, med,
                   aec(first))
    if method == "mca":
        m.extra = {f"level{j + 1}_ms": (level_ms[j] if params.timing else None) for j in range(3)}
    return StaticRun(first, m, level_ms)


def sweep(profile: ScenarioConfig, task_counts: Sequence[int], seeds: Sequence[int],
          methods: Sequence[str] = METHODS, params: RunParams = RunParams(), repeats: int = 3,
          on_row: Optional[Callable[[RunMetrics], None]] = None) -> List[RunMetrics]:
    """One row per (method, n, seed); refusals by the exact guard yield no row."""
    rows = []
    for n in task_counts:
        for seed in seeds:
            sc = generate_static(replace(profile, task_count=n, seed=seed))
            for method in methods:
                run = run_static(sc, method, params, repeats=repeats if params.timing else 1)
                m = run.metrics
                if "level1_ms" not in m.extra:
                    m.extra = {"level1_ms": None, "level2_ms": None, "level3_ms": None}
                rows.append(m)
                if on_row:
                    on_row(m)
    return rows


# --------------------------------------------------------------------------- #
# Dynamic replanning

@dataclass
class DynamicRound:
    round: int
    nt: int
    at: int
    tcr: float
    rpt_ms: Optional[float]
    rsc: Optional[float]
    occupancy: Optional[float]


@dataclass
class DynamicRun:
    method: str
    world: World
    rounds: List[DynamicRound] = field(default_factory=list)

    def metrics(self, seed: int) -> List[RunMetrics]:
        out = []
        for r in self.rounds:
            m = RunMetrics(self.method, seed, r.at, r.tcr, r.rpt_ms, None, r.rsc, r.occupancy,
                           round=r.round, extra={"nt": r.nt, "at": r.at})
            out.append(m)
        out[-1].aec_km = aec(self.world) if out else None
        return out


def _snapshot(world: World) -> AllocationScheme:
    return world.scheme()


def _open_unassigned(world: World) -> List[str]:
    """Known tasks with no assignment whose window can still be met."""
    placed = world.assignment_of()
    out = []
    for tid, t in world.tasks.items():
        if tid not in placed and t.window_end - t.required_duration >= world.clock:
            out.append(tid)
    return sorted(out)


def run_dynamic(scenario: Scenario, events: Sequence[DisturbanceEvent], method: str,
                params: RunParams = RunParams(), trace: Optional[Trace] = None) -> DynamicRun:
    """Plan the initial tasks, then replay the event schedule round by round.

    SSA and MCA only plan the new tasks of each round. AUS, exact and TCA take
    back every unstarted task and replan it together with the arrivals.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    world = scenario.world(trace)
    run = DynamicRun(method, world)
    initial = [t.id for t in scenario.tasks]
    if initial:
        _solve(world, method, initial, params)
        check(world)
    for rno, event in enumerate(sorted(events, key=lambda e: e.time), start=1):
        before = _snapshot(world)
        prev_ids = sorted(world.tasks)
        requests = handle_disturbance(world, event, params.mca.arrival_start_level)
        new_ids = sorted(t for req in requests for t in req.tasks)
        nt = len(event.payload.get("tasks", [])) or len(new_ids)
        elapsed = 0.0
        if method in GLOBAL_REPLAN:
            world.reclaim_all_pending()
            pool = _open_unassigned(world)
            if pool:
                elapsed, _ = _solve(world, method, pool, params)
        else:
            for req in requests:
                if method == "mca":
                    ms, _ = _solve(world, method, req.tasks, params, initiator=req.initiator)
                else:
                    ms, _ = _solve(world, method, req.tasks, params)
                elapsed += ms
        check(world)
        after = _snapshot(world)
        all_ids = sorted(world.tasks)
        run.rounds.append(DynamicRound(
            round=rno, nt=nt, at=len(all_ids),
            tcr=tcr(after, all_ids),
            rpt_ms=elapsed if params.timing else None,
            rsc=rsc(before, after) if before.assignments else 0.0,
            occupancy=occupancy_rate(new_ids, prev_ids) if prev_ids else None,
        ))
    return run


def profile(name: str) -> ScenarioConfig:
    try:
        return PROFILES[name]
    except KeyError:
        raise ValueError(f"unknown profile {name!r}; choose from {', '.join(sorted(PROFILES))}")
