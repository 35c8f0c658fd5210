"""Comparison allocators: sequential auctions, class-ordered assignment, the
centralized exact model and its clustered variant."""
from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from .bidding import Bundle, bid_order, build_bundle
from .model import Provenance, ResourceKind, Task
from .protocol import AuctionParams, Contract, execute_contract
from .wdp import WdpInstance, solve_exact
from .world import World

log = logging.getLogger(__name__)

AUS_ORDER = (ResourceKind.AIRSHIP, ResourceKind.UAV, ResourceKind.SATELLITE)


class SizeGuardExceeded(RuntimeError):
    """The centralized exact model refuses instances above its size guard."""


@dataclass(frozen=True)
class BaselineParams:
    auction: AuctionParams = AuctionParams(solver="exact")
    max_tasks: int = 400
    max_iterations: int = 50
    max_nodes: Optional[int] = 20_000
    kmeans_iterations: int = 50


@dataclass
class BaselineResult:
    assigned: Set[str]
    unassigned: Set[str]
    value: float = 0.0
    iterations: int = 0
    hit_cap: bool = False


def _commit_single(world: World, rid: str, bundle: Bundle, method: str) -> List[str]:
    """Commit a one-task winning bid; returns task ids it displaced."""
    cid = world.next_contract_id()
    contract = Contract(cid, [rid], [bundle], world.clock, bundle.price)
    delta = execute_contract(world, contract, 0, method)
    return [t for t, _ in delta.evicted]


class _Queue:
    """Tasks in bid order; displaced tasks re-enter at their own rank."""

    def __init__(self, tasks: Sequence[Task]):
        self.heap = [(-t.weight, t.window_start, t.id) for t in tasks]
        heapq.heapify(self.heap)
        self.tries: Dict[str, int] = {}

    def push(self, task: Task) -> None:
        heapq.heappush(self.heap, (-task.weight, task.window_start, task.id))

    def __iter__(self):
        while self.heap:
            yield heapq.heappop(self.heap)[2]


def _sequential(world: World, task_ids: Sequence[str], params: BaselineParams, method: str,
                classes: Optional[Sequence[ResourceKind]]) -> BaselineResult:
    ap = params.auction
    queue = _Queue([world.tasks[t] for t in task_ids])
    touched = set(task_ids)
    value = 0.0
    attempts: Dict[str, int] = {}
    groups = [None] if classes is None else list(classes)
    for tid in queue:
        attempts[tid] = attempts.get(tid, 0) + 1
        if attempts[tid] > params.max_iterations:
            continue
        task = world.tasks[tid]
        for kind in groups:
            best: Optional[Tuple[float, str, Bundle]] = None
            for res in world.live_resources():
                if kind is not None and res.kind is not kind:
                    continue
                b = build_bundle(res, [task], world.tasks, ap.weights, world.pass_model,
                                 ap.allow_displacement, ap.displacement_ratio)
                if b.is_bid and (best is None or b.price > best[0]):
                    best = (b.price, res.id, b)
            if best is not None:
                value += best[0]
                for victim in _commit_single(world, best[1], best[2], method):
                    touched.add(victim)
                    queue.push(world.tasks[victim])
                break
    placed = world.assignment_of()
    assigned = {t for t in touched if t in placed}
    return BaselineResult(assigned, touched - assigned, value)


def solve_ssa(world: World, task_ids: Sequence[str], params: BaselineParams = BaselineParams()
              ) -> BaselineResult:
    """Each task, heaviest first, goes to whichever resource bids the most for it alone."""
    return _sequential(world, task_ids, params, "ssa", None)


def solve_aus(world: World, task_ids: Sequence[str], params: BaselineParams = BaselineParams()
              ) -> BaselineResult:
    """Like SSA, but airships are asked first, then UAVs, then satellites."""
    return _sequential(world, task_ids, params, "aus", AUS_ORDER)


def _candidates(world: World, remaining: Sequence[str], ap: AuctionParams
                ) -> List[Tuple[str, Bundle]]:
    tasks = [world.tasks[t] for t in sorted(remaining)]
    out = []
    for res in world.live_resources():
        greedy = build_bundle(res, tasks, world.tasks, ap.weights, world.pass_model,
                              ap.allow_displacement, ap.displacement_ratio)
        if not greedy.is_bid:
            continue
        out.append((res.id, greedy))
        if len(greedy.items) == 1:
            singles = [t for t in tasks if t.id != greedy.items[0].task_id]
        else:
            singles = tasks
        for t in singles:
            b = build_bundle(res, [t], world.tasks, ap.weights, world.pass_model,
                             ap.allow_displacement, ap.displacement_ratio)
            if b.is_bid:
                out.append((res.id, b))
    out.sort(key=lambda rb: (-rb[1].price, rb[0], sorted(rb[1].task_ids)))
    return out


def solve_exact_central(world: World, task_ids: Sequence[str],
                        params: BaselineParams = BaselineParams(), method: str = "exact"
                        ) -> BaselineResult:
    """Centralized model: every resource offers its greedy bundle plus every
    single task it could take; one global set-packing problem picks at most one
    offer per resource. Winners commit and the remaining tasks are re-offered
    until a pass places nothing.
    """
    if len(task_ids) > params.max_tasks:
        raise SizeGuardExceeded(
            f"{len(task_ids)} tasks exceed the centralized model's guard of {params.max_tasks}")
    ap = params.auction
    touched = set(task_ids)
    remaining = set(task_ids)
    value = 0.0
    it = 0
    hit_cap = False
    while remaining and it < params.max_iterations:
        it += 1
        offers = _candidates(world, sorted(remaining), ap)
        if not offers:
            break
        # A per-resource token makes offers from one resource mutually exclusive.
        gt = [frozenset(b.task_ids | {"@" + rid}) for rid, b in offers]
        inst = WdpInstance(gt, [b.price for _, b in offers])
        sol = solve_exact(inst, ap.max_bids, params.max_nodes)
        hit_cap = hit_cap or sol.hit_cap
        cid = world.next_contract_id()
        contract = Contract(cid, [offers[i][0] for i in sol.selected],
                            [offers[i][1] for i in sol.selected], world.clock, sol.value)
        world.trace.emit("award", cid, world.clock, {
            "winners": contract.winners, "value": sol.value, "tasks": sorted(contract.task_ids),
            "unallocated": sorted(remaining - contract.task_ids),
        })
        delta = execute_contract(world, contract, 0, method)
        if not delta.assigned:
            break
        value += sol.value
        evicted = {t for t, _ in delta.evicted}
        touched |= evicted
        remaining = (remaining - delta.assigned_ids) | evicted
    placed = world.assignment_of()
    assigned = {t for t in touched if t in placed}
    return BaselineResult(assigned, touched - assigned, value, it, hit_cap)


# --------------------------------------------------------------------------- #
# Clustering

def kmeans(points: np.ndarray, k: int, seed: int = 0, max_iter: int = 50) -> np.ndarray:
    """Lloyd's algorithm with seeded farthest-point initialisation.

    Returns one cluster label per point. Clusters that empty out are re-seeded
    with the point farthest from its current center.
    """
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    if n == 0:
        raise ValueError("kmeans needs at least one point")
    if k < 1:
        raise ValueError("k must be at least 1")
    if k > n:
        log.warning("k=%d exceeds the %d points; using k=%d", k, n, n)
        k = n
    rng = np.random.default_rng(seed)
    centers = [pts[rng.integers(n)]]
    d2 = ((pts - centers[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        i = int(np.argmax(d2))
        centers.append(pts[i])
        d2 = np.minimum(d2, ((pts - pts[i]) ** 2).sum(axis=1))
    c = np.array(centers)

    labels = np.full(n, -1)
    for _ in range(max_iter):
        dist = ((pts[:, None, :] - c[None, :, :]) ** 2).sum(axis=2)
        new = dist.argmin(axis=1)
        for j in range(k):
            if not np.any(new == j):
                far = int(np.argmax(dist[np.arange(n), new]))
                new[far] = j
                dist[far, :] = 0.0
        if np.array_equal(new, labels):
            break
        labels = new
        c = np.array([pts[labels == j].mean(axis=0) for j in range(k)])
    return labels


def sse(points: np.ndarray, labels: np.ndarray) -> float:
    pts = np.asarray(points, dtype=float)
    total = 0.0
    for j in np.unique(labels):
        members = pts[labels == j]
        total += float(((members - members.mean(axis=0)) ** 2).sum())
    return total


def solve_tca(world: World, task_ids: Sequence[str], k: int,
              params: BaselineParams = BaselineParams(), seed: Optional[int] = None
              ) -> BaselineResult:
    """Cluster task locations, then run the centralized model cluster by cluster
    in ascending centroid-x order."""
    ids = sorted(task_ids)
    if not ids:
        return BaselineResult(set(), set())
    if not 1 <= k <= len(ids):
        raise ValueError(f"k must lie in [1, {len(ids)}], got {k}")
    if k == 1:
        return solve_exact_central(world, ids, params)
    pts = np.array([world.tasks[t].location for t in ids])
    labels = kmeans(pts, k, world.seed if seed is None else seed, params.kmeans_iterations)
    clusters = []
    for j in np.unique(labels):
        members = [ids[i] for i in np.flatnonzero(labels == j)]
        cx = float(pts[labels == j][:, 0].mean())
        clusters.append((cx, members[0], members))
    clusters.sort()
    assigned: Set[str] = set()
    touched: Set[str] = set(ids)
    value = 0.0
    for _, _, members in clusters:
        r = solve_exact_central(world, members, params)
        touched |= r.unassigned | r.assigned
        value += r.value
    placed = world.assignment_of()
    assigned = {t for t in touched if t in placed}
    return BaselineResult(assigned, touched - assigned, value)
