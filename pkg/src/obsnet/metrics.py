"""Evaluation quantities: completion rate, flight distance per task, scheme change, occupancy."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence

from .model import AllocationScheme
from .world import World


def tcr(scheme: AllocationScheme, task_ids: Iterable[str]) -> float:
    """Share of the requested tasks that ended up assigned."""
    wanted = set(task_ids)
    if not wanted:
        raise ValueError("completion rate needs at least one task")
    return len(scheme.assigned_ids() & wanted) / len(wanted)


def aec(world: World) -> Optional[float]:
    """Total flight distance over completed task count; None when nothing completed.

    Satellites fly nothing but their observations count towards the denominator.
    """
    completed = len(world.assignment_of())
    if completed == 0:
        return None
    return world.total_flight_km() / completed


def aec_from_trace(lines: Iterable[Mapping]) -> Optional[float]:
    """Same ratio rebuilt from commit/reclaim events of a payload-level trace."""
    km = 0.0
    held: Dict[str, int] = {}
    for ln in lines:
        stage = ln.get("stage")
        if stage not in ("commit", "reclaim"):
            continue
        if "payload" not in ln:
            raise ValueError("trace lacks payloads; record it at level 'trace'")
        p = ln["payload"]
        km += p["distance_delta"]
        held[p["task"]] = held.get(p["task"], 0) + (1 if stage == "commit" else -1)
    completed = sum(1 for v in held.values() if v > 0)
    if completed == 0:
        return None
    return km / completed


def rsc(old: AllocationScheme, new: AllocationScheme) -> float:
    """Fraction of old assignments that moved to another resource or were dropped."""
    before = old.resource_of()
    if not before:
        raise ValueError("scheme change needs a nonempty previous scheme")
    after = new.resource_of()
    changed = sum(1 for tid, rid in before.items() if after.get(tid) != rid)
    return changed / len(before)


def occupancy_rate(new_tasks: Sequence[str], prev_tasks: Sequence[str]) -> float:
    if not prev_tasks:
        raise ValueError("occupancy rate needs a nonempty previous task set")
    return len(new_tasks) / len(prev_tasks)


CSV_COLUMNS = ["method", "seed", "n_tasks", "round", "tcr", "runtime_ms", "aec_km", "rsc", "or"]


@dataclass
class RunMetrics:
    method: str
    seed: int
    n_tasks: int
    tcr: float
    runtime_ms: Optional[float] = None
    aec_km: Optional[float] = None
    rsc: Optional[float] = None
    occupancy: Optional[float] = None
    round: int = 0
    extra: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.tcr <= 1.0:
            raise ValueError(f"tcr {self.tcr} outside [0, 1]")
        if self.rsc is not None and not 0.0 <= self.rsc <= 1.0:
            raise ValueError(f"rsc {self.rsc} outside [0, 1]")
        if self.occupancy is not None and self.occupancy < 0:
            raise ValueError("occupancy rate must be nonnegative")

    def row(self) -> Dict[str, object]:
        out = {
            "method": self.method, "seed": self.seed, "n_tasks": self.n_tasks, "round": self.round,
            "tcr": _fmt(self.tcr), "runtime_ms": _fmt(self.runtime_ms, 3),
            "aec_km": _fmt(self.aec_km), "rsc": _fmt(self.rsc), "or": _fmt(self.occupancy),
        }
        for k, v in self.extra.items():
            out[k] = _fmt(v, 3) if isinstance(v, float) else v
        return out


def _fmt(v, digits: int = 6) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        if math.isnan(v):
            return ""
        return f"{v:.{digits}f}"
    return str(v)


def to_csv(rows: Sequence[RunMetrics], extra_columns: Sequence[str] = ()) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS + list(extra_columns), lineterminator="\n",
                            restval="")
    writer.writeheader()
    for r in rows:
        writer.writerow(r.row())
    return buf.getvalue()
