"""Seeded scenario generation (static and dynamic experiments) and JSON persistence."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .feasibility import PassModel
from .mca import DisturbanceEvent, DisturbanceKind
from .model import (
    Band,
    DEFAULT_HORIZON_S,
    Pass,
    PlanningCenter,
    Resource,
    ResourceKind,
    Task,
    validate_scenario,
)
from .trace import Trace
from .world import World

SCHEMA_VERSION = 1


class ScenarioError(ValueError):
    """Malformed, invalid or unsupported scenario document."""


@dataclass(frozen=True)
class KindSpec:
    """Capability sheet for one resource kind. Tuples are assigned round-robin."""

    cruise_speed: Tuple[float, ...] = (0.0,)
    endurance_km: Tuple[Optional[float], ...] = (None,)
    visible_width_m: Tuple[float, ...] = (500.0,)
    side_swing_deg: Tuple[float, ...] = (0.0,)
    max_duration_s: int = 3000
    poweron: int = 20
    max_resolution_m: float = 1.0
    bands: Tuple[Band, ...] = (Band.OPTICAL,)


DEFAULT_KINDS: Dict[ResourceKind, KindSpec] = {
    ResourceKind.SATELLITE: KindSpec(visible_width_m=(8200.0, 5000.0), side_swing_deg=(30.0, 25.0),
                                     max_duration_s=2400, poweron=20, max_resolution_m=2.0,
                                     bands=(Band.OPTICAL, Band.SAR)),
    ResourceKind.UAV: KindSpec(cruise_speed=(90.0, 60.0), endurance_km=(21.0, 30.0),
                               visible_width_m=(500.0, 600.0), max_duration_s=3000, poweron=15,
                               max_resolution_m=0.5, bands=(Band.OPTICAL, Band.INFRARED)),
    ResourceKind.AIRSHIP: KindSpec(cruise_speed=(60.0,), endurance_km=(360.0,),
                                   visible_width_m=(650.0,), max_duration_s=4800, poweron=30,
                                   max_resolution_m=1.0, bands=(Band.OPTICAL, Band.INFRARED)),
}


@dataclass(frozen=True)
class ScenarioConfig:
    centers: Tuple[Tuple[ResourceKind, int], ...]
    kinds: Dict[ResourceKind, KindSpec] = field(default_factory=lambda: dict(DEFAULT_KINDS))
    task_count: int = 600
    region_km: Tuple[float, float] = (200.0, 200.0)
    horizon_s: int = DEFAULT_HORIZON_S
    seed: int = 0
    pass_model: PassModel = PassModel()
    comm_radius_km: float = 30.0
    window_len_s: Tuple[int, int] = (1800, 7200)
    duration_s: Tuple[int, int] = (10, 40)
    resolutions_m: Tuple[float, ...] = (1.0, 2.0, 5.0)
    band_probs: Tuple[Tuple[Band, float], ...] = (
        (Band.OPTICAL, 0.7), (Band.INFRARED, 0.25), (Band.SAR, 0.05))
    # dynamic experiment
    initial_tasks: int = 40
    injection_rounds: int = 6
    injection_size: Tuple[int, int] = (30, 50)

    def validate(self) -> None:
        if any(n < 0 for _, n in self.centers):
            raise ScenarioError("resource counts must be nonnegative")
        if self.task_count < 0 or self.initial_tasks < 0 or self.injection_rounds < 0:
            raise ScenarioError("task counts must be nonnegative")
        if self.horizon_s <= 0 or min(self.region_km) <= 0:
            raise ScenarioError("horizon and region must be positive")
        lo, hi = self.window_len_s
        if not 0 < lo <= hi:
            raise ScenarioError("window length range must be positive and ordered")
        dlo, dhi = self.duration_s
        if not 0 < dlo <= dhi < lo:
            raise ScenarioError("task durations must be positive and shorter than windows")
        a, b = self.injection_size
        if not 0 <= a <= b:
            raise ScenarioError("injection size range must be ordered")


FULL = ScenarioConfig(
    centers=((ResourceKind.SATELLITE, 2), (ResourceKind.UAV, 25), (ResourceKind.UAV, 28),
             (ResourceKind.AIRSHIP, 9)),
    task_count=600,
)

SMALL = ScenarioConfig(
    centers=((ResourceKind.SATELLITE, 1), (ResourceKind.UAV, 9), (ResourceKind.UAV, 9),
             (ResourceKind.AIRSHIP, 3)),
    kinds={**DEFAULT_KINDS,
           ResourceKind.SATELLITE: replace(DEFAULT_KINDS[ResourceKind.SATELLITE],
                                           visible_width_m=(5000.0,), side_swing_deg=(25.0,))},
    task_count=40,
    initial_tasks=40,
)

PROFILES = {"full": FULL, "small": SMALL}


@dataclass
class Scenario:
    horizon_s: int
    region_km: Tuple[float, float]
    centers: List[PlanningCenter]
    resources: List[Resource]
    tasks: List[Task]
    seed: int
    pass_model: PassModel = PassModel()
    comm_radius_km: float = 30.0

    def validate(self) -> List[str]:
        return validate_scenario(self.tasks, self.centers, self.resources, self.horizon_s)

    def world(self, trace: Optional[Trace] = None) -> World:
        w = World(self.horizon_s, self.region_km,
                  {c.id: PlanningCenter(c.id, list(c.resource_ids), list(c.peer_center_ids))
                   for c in self.centers},
                  {r.id: Resource.from_dict(r.to_dict()) for r in self.resources},
                  {t.id: t for t in self.tasks}, self.seed, self.pass_model, self.comm_radius_km,
                  trace=trace if trace is not None else Trace("off"))
        w.recompute_neighbors()
        return w

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "horizon_s": self.horizon_s,
            "region_km": list(self.region_km),
            "seed": self.seed,
            "pass_model": {"ground_speed_km_s": self.pass_model.ground_speed_km_s,
                           "altitude_km": self.pass_model.altitude_km,
                           "passes_per_horizon": self.pass_model.passes_per_horizon},
            "comm_radius_km": self.comm_radius_km,
            "centers": [c.to_dict() for c in self.centers],
            "resources": [r.to_dict() for r in self.resources],
            "tasks": [t.to_dict() for t in self.tasks],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        version = d.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ScenarioError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
        try:
            pm = d.get("pass_model", {})
            return cls(
                horizon_s=int(d["horizon_s"]),
                region_km=(float(d["region_km"][0]), float(d["region_km"][1])),
                centers=[PlanningCenter.from_dict(c) for c in d["centers"]],
                resources=[Resource.from_dict(r) for r in d["resources"]],
                tasks=[Task.from_dict(t) for t in d["tasks"]],
                seed=int(d["seed"]),
                pass_model=PassModel(**pm),
                comm_radius_km=float(d.get("comm_radius_km", 30.0)),
            )
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise ScenarioError(f"malformed scenario field: {exc!r}") from exc


def dumps(obj: dict) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def save(scenario: Scenario, path) -> None:
    Path(path).write_text(dumps(scenario.to_dict()))


def _parse(path) -> dict:
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def load(path) -> Scenario:
    return Scenario.from_dict(_parse(path))


def save_events(events: Sequence[DisturbanceEvent], path) -> None:
    Path(path).write_text(dumps({"schema_version": SCHEMA_VERSION,
                                 "events": [e.to_dict() for e in events]}))


def load_events(path) -> List[DisturbanceEvent]:
    d = _parse(path)
    if d.get("schema_version") != SCHEMA_VERSION:
        raise ScenarioError(f"unsupported schema_version {d.get('schema_version')!r}")
    try:
        return [DisturbanceEvent.from_dict(e) for e in d["events"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"malformed event: {exc!r}") from exc


# --------------------------------------------------------------------------- #
# Generation

def _make_passes(rng: np.random.Generator, cfg: ScenarioConfig) -> List[Pass]:
    w, h = cfg.region_km
    passes = []
    speed = cfg.pass_model.ground_speed_km_s
    for _ in range(cfg.pass_model.passes_per_horizon):
        while True:
            heading = float(rng.uniform(0.0, math.pi))
            u = (math.cos(heading), math.sin(heading))
            p0 = (float(rng.uniform(0, w)), float(rng.uniform(0, h)))
            lo, hi = -math.inf, math.inf
            for axis, size in ((0, w), (1, h)):
                if abs(u[axis]) < 1e-12:
                    continue
                a, b = (0 - p0[axis]) / u[axis], (size - p0[axis]) / u[axis]
                lo, hi = max(lo, min(a, b)), min(hi, max(a, b))
            if hi - lo > 1e-6:
                break
        duration = (hi - lo) / speed
        start = float(rng.uniform(0, cfg.horizon_s - duration))
        origin = (round(p0[0] + lo * u[0], 6), round(p0[1] + lo * u[1], 6))
        passes.append(Pass(round(start, 3), round(start + duration, 3), origin,
                           (round(u[0], 12), round(u[1], 12))))
    passes.sort(key=lambda p: p.start)
    return passes


def _make_resources(rng: np.random.Generator, cfg: ScenarioConfig
                    ) -> Tuple[List[PlanningCenter], List[Resource]]:
    centers, resources = [], []
    w, h = cfg.region_km
    rid = 0
    for ci, (kind, count) in enumerate(cfg.centers, start=1):
        ks = cfg.kinds[kind]
        members = []
        for j in range(count):
            rid += 1
            name = f"r{rid:03d}"
            endurance = ks.endurance_km[j % len(ks.endurance_km)]
            endurance = math.inf if endurance is None or kind is ResourceKind.SATELLITE else endurance
            res = Resource(
                id=name,
                kind=kind,
                center_id=f"p{ci}",
                position=(round(float(rng.uniform(0, w)), 3), round(float(rng.uniform(0, h)), 3)),
                cruise_speed=ks.cruise_speed[j % len(ks.cruise_speed)],
                endurance_remaining=endurance,
                duration_remaining=ks.max_duration_s,
                poweron_remaining=ks.poweron,
                visible_width=ks.visible_width_m[j % len(ks.visible_width_m)],
                side_swing_angle=ks.side_swing_deg[j % len(ks.side_swing_deg)],
                max_resolution=ks.max_resolution_m,
                bands=frozenset(ks.bands),
                initial_endurance=endurance,
                initial_duration=ks.max_duration_s,
                initial_poweron=ks.poweron,
                altitude_km=cfg.pass_model.altitude_km,
            )
            if kind is ResourceKind.SATELLITE:
                res.passes = _make_passes(rng, cfg)
            resources.append(res)
            members.append(name)
        centers.append(PlanningCenter(f"p{ci}", members))
    ids = [c.id for c in centers]
    for c in centers:
        c.peer_center_ids = [p for p in ids if p != c.id]
    return centers, resources


def make_tasks(rng: np.random.Generator, cfg: ScenarioConfig, count: int, first_index: int = 1,
               earliest: int = 0) -> List[Task]:
    """Uniformly scattered point targets with windows inside [earliest, horizon]."""
    w, h = cfg.region_km
    bands = [b for b, _ in cfg.band_probs]
    probs = np.array([p for _, p in cfg.band_probs], dtype=float)
    probs /= probs.sum()
    out = []
    for i in range(count):
        loc = (round(float(rng.uniform(0, w)), 3), round(float(rng.uniform(0, h)), 3))
        weight = round(float(rng.uniform(0, 1)), 4)
        span = cfg.horizon_s - earliest
        length = int(rng.integers(cfg.window_len_s[0], cfg.window_len_s[1] + 1))
        length = min(length, span)
        start = earliest + int(rng.integers(0, span - length + 1))
        duration = int(rng.integers(cfg.duration_s[0], cfg.duration_s[1] + 1))
        duration = min(duration, length)
        out.append(Task(
            id=f"t{first_index + i:04d}",
            location=loc,
            weight=weight,
            window_start=start,
            window_end=start + length,
            required_duration=duration,
            required_resolution=float(cfg.resolutions_m[int(rng.integers(len(cfg.resolutions_m)))]),
            required_band=bands[int(rng.choice(len(bands), p=probs))],
        ))
    return out


def generate_static(cfg: ScenarioConfig) -> Scenario:
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    centers, resources = _make_resources(rng, cfg)
    tasks = make_tasks(rng, cfg, cfg.task_count)
    sc = Scenario(cfg.horizon_s, cfg.region_km, centers, resources, tasks, cfg.seed,
                  cfg.pass_model, cfg.comm_radius_km)
    _set_neighbors(sc)
    return sc


def _set_neighbors(sc: Scenario) -> None:
    w = sc.world()
    for r in sc.resources:
        r.neighbors = set(w.resources[r.id].neighbors)


def generate_dynamic(cfg: ScenarioConfig) -> Tuple[Scenario, List[DisturbanceEvent]]:
    """Initial tasks plus evenly spaced task-arrival events."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    centers, resources = _make_resources(rng, cfg)
    tasks = make_tasks(rng, cfg, cfg.initial_tasks)
    sc = Scenario(cfg.horizon_s, cfg.region_km, centers, resources, tasks, cfg.seed,
                  cfg.pass_model, cfg.comm_radius_km)
    _set_neighbors(sc)
    events = []
    next_index = cfg.initial_tasks + 1
    step = cfg.horizon_s // (cfg.injection_rounds + 1) if cfg.injection_rounds else 0
    for r in range(1, cfg.injection_rounds + 1):
        t = r * step
        n = int(rng.integers(cfg.injection_size[0], cfg.injection_size[1] + 1))
        new = make_tasks(rng, cfg, n, next_index, earliest=t)
        next_index += n
        events.append(DisturbanceEvent(t, DisturbanceKind.TASK_ARRIVAL, {"tasks": new}))
    return sc, events
