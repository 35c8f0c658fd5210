"""Winner determination: weighted set packing over bidders' task bundles.

Bundles conflict when they share an item. The exact solver is a depth-first
branch and bound over independent conflict components; the local search
(:func:`solve_fls`) is the float-interval heuristic used inside every auction
round.
"""
from __future__ import annotations

import json
import random
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import FrozenSet, Hashable, List, Optional, Sequence, Tuple

TIE_EPS = 1e-9
DEFAULT_MAX_BIDS = 10_000


class InstanceTooLarge(RuntimeError):
    """Raised when an instance exceeds the exact solver's size guard."""


@dataclass
class WdpInstance:
    gt: List[FrozenSet[Hashable]]
    vt: List[float]
    m_con: List[List[bool]] = field(default_factory=list)

    def __post_init__(self):
        self.gt = [frozenset(b) for b in self.gt]
        self.vt = [float(v) for v in self.vt]
        if len(self.gt) != len(self.vt):
            raise ValueError(f"{len(self.gt)} bundles but {len(self.vt)} prices")
        if any(v < 0 for v in self.vt):
            raise ValueError("bundle prices must be nonnegative")
        if not self.m_con:
            self.m_con = build_conflict_matrix(self.gt)
        self._masks = _conflict_masks(self.m_con)

    @property
    def bm(self) -> int:
        return len(self.gt)

    def conflict_masks(self) -> List[int]:
        return self._masks

    def to_json(self, seed: Optional[int] = None) -> str:
        return json.dumps({"GT": [sorted(map(str, b)) for b in self.gt],
                           "VT": self.vt, "seed": seed}, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> Tuple["WdpInstance", Optional[int]]:
        d = json.loads(text)
        return cls([frozenset(b) for b in d["GT"]], d["VT"]), d.get("seed")

    def dump(self, path, seed: Optional[int] = None) -> None:
        Path(path).write_text(self.to_json(seed))

    @classmethod
    def load(cls, path) -> Tuple["WdpInstance", Optional[int]]:
        return cls.from_json(Path(path).read_text())


@dataclass
class WdpSolution:
    x: Tuple[bool, ...]
    value: float
    covered: FrozenSet[Hashable]
    iterations: int = 0
    hit_cap: bool = False

    @property
    def selected(self) -> List[int]:
        return [i for i, xi in enumerate(self.x) if xi]


@dataclass(frozen=True)
class FlsParams:
    rho: float = 0.9
    sigma: float = 0.2
    y: int = 10
    rng_seed: int = 0
    max_iterations: int = 10_000

    def __post_init__(self):
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must lie in [0, 1], got {self.rho}")
        if self.sigma < 0:
            raise ValueError(f"sigma must be nonnegative, got {self.sigma}")
        if self.y < 1:
            raise ValueError(f"y must be positive, got {self.y}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")


def build_conflict_matrix(gt: Sequence[FrozenSet[Hashable]]) -> List[List[bool]]:
    n = len(gt)
    m = [[False] * n for _ in range(n)]
    owners: dict = {}
    for i, b in enumerate(gt):
        for item in b:
            owners.setdefault(item, []).append(i)
    for idx in owners.values():
        for a in idx:
            for b in idx:
                if a != b:
                    m[a][b] = True
    return m


def _conflict_masks(m_con: List[List[bool]]) -> List[int]:
    masks = []
    for row in m_con:
        mask = 0
        for j, c in enumerate(row):
            if c:
                mask |= 1 << j
        masks.append(mask)
    return masks


def _mask_to_x(mask: int, n: int) -> Tuple[bool, ...]:
    return tuple(bool(mask >> i & 1) for i in range(n))


def _solution(inst: WdpInstance, mask: int, **kw) -> WdpSolution:
    x = _mask_to_x(mask, inst.bm)
    covered = frozenset().union(*(inst.gt[i] for i in range(inst.bm) if x[i]))
    return WdpSolution(x, solution_value(inst, x), covered, **kw)


def solution_value(inst: WdpInstance, x: Sequence[bool]) -> float:
    if len(x) != inst.bm:
        raise ValueError(f"selection has length {len(x)}, instance has {inst.bm} bundles")
    return sum(v for v, xi in zip(inst.vt, x) if xi)


def is_feasible(inst: WdpInstance, x: Sequence[bool]) -> bool:
    if len(x) != inst.bm:
        raise ValueError(f"selection has length {len(x)}, instance has {inst.bm} bundles")
    chosen = [i for i, xi in enumerate(x) if xi]
    return not any(inst.m_con[a][b] for k, a in enumerate(chosen) for b in chosen[k + 1:])


# --------------------------------------------------------------------------- #
# Exact branch and bound

def _components(masks: List[int], n: int) -> List[List[int]]:
    seen = 0
    comps = []
    for s in range(n):
        if seen >> s & 1:
            continue
        comp, frontier = 0, 1 << s
        while frontier:
            comp |= frontier
            nxt = 0
            f = frontier
            while f:
                low = f & -f
                nxt |= masks[low.bit_length() - 1]
                f ^= low
            frontier = nxt & ~comp
        seen |= comp
        comps.append([i for i in range(n) if comp >> i & 1])
    return comps


class _Component:
    """Branch and bound over one connected component of the conflict graph.

    Bundles are branched in index order, include-branch first. Nodes are pruned
    when a clique-cover bound (each shared item is a clique: at most one of the
    bundles holding it can be chosen) cannot reach the incumbent. Among optimal
    selections the lexicographically smallest 0/1 vector is kept.
    """

    def __init__(self, inst: WdpInstance, idx: List[int], budget: Optional[List[int]] = None):
        self.idx = idx
        self.budget = budget
        self.nodes = 0
        self.n = len(idx)
        pos = {g: k for k, g in enumerate(idx)}
        full = inst.conflict_masks()
        self.v = [inst.vt[g] for g in idx]
        self.conf = []
        for g in idx:
            m, local = full[g], 0
            while m:
                low = m & -m
                j = low.bit_length() - 1
                if j in pos:
                    local |= 1 << pos[j]
                m ^= low
            self.conf.append(local)
        holders: dict = {}
        for k, g in enumerate(idx):
            for item in inst.gt[g]:
                holders[item] = holders.get(item, 0) | (1 << k)
        # Sorted so the bound, and hence the capped search, ignores hash order.
        self.cliques = [[holders[item] for item in sorted(inst.gt[g], key=str)] for g in idx]
        self.by_price = sorted(range(self.n), key=lambda k: (-self.v[k], k))
        self.best_mask, self.best_value = self._greedy()

    def _greedy(self) -> Tuple[int, float]:
        chosen, avail, value = 0, (1 << self.n) - 1, 0.0
        for k in self.by_price:
            if avail >> k & 1:
                chosen |= 1 << k
                value += self.v[k]
                avail &= ~self.conf[k] & ~(1 << k)
        return chosen, value

    def _bound(self, avail: int) -> float:
        uncovered, bound = avail, 0.0
        for k in self.by_price:
            if not uncovered:
                break
            if uncovered >> k & 1:
                bound += self.v[k]
                best = max(self.cliques[k], key=lambda c: bin(c & uncovered).count("1")) \
                    if self.cliques[k] else (1 << k)
                uncovered &= ~(best | (1 << k))
        return bound

    def _better(self, mask: int, value: float) -> bool:
        if value > self.best_value + TIE_EPS:
            return True
        if value < self.best_value - TIE_EPS:
            return False
        diff = mask ^ self.best_mask
        if not diff:
            return False
        low = diff & -diff
        return not (mask & low)

    def solve(self) -> int:
        sys.setrecursionlimit(max(sys.getrecursionlimit(), 4 * self.n + 1000))
        self._dfs(0, 0.0, (1 << self.n) - 1)
        return self.best_mask

    def _dfs(self, chosen: int, value: float, avail: int) -> None:
        self.nodes += 1
        if self.budget is not None:
            if self.budget[0] <= 0:
                return
            self.budget[0] -= 1
        if not avail:
            if self._better(chosen, value):
                self.best_mask, self.best_value = chosen, value
            return
        if value + self._bound(avail) < self.best_value - TIE_EPS:
            return
        low = avail & -avail
        k = low.bit_length() - 1
        self._dfs(chosen | low, value + self.v[k], avail & ~self.conf[k] & ~low)
        self._dfs(chosen, value, avail & ~low)


def solve_exact(inst: WdpInstance, max_bids: int = DEFAULT_MAX_BIDS,
                max_nodes: Optional[int] = None) -> WdpSolution:
    """Optimal selection; ties resolved to the lexicographically smallest 0/1 vector.

    ``max_nodes`` caps the search tree across all components. Once it runs out
    the best selection found so far is returned with ``hit_cap`` set; without a
    cap the result is always optimal.
    """
    if inst.bm > max_bids:
        raise InstanceTooLarge(f"{inst.bm} bids exceed the exact-solver cap of {max_bids}")
    if max_nodes is not None and max_nodes < 1:
        raise ValueError("max_nodes must be positive")
    masks = inst.conflict_masks()
    budget = None if max_nodes is None else [max_nodes]
    mask, nodes = 0, 0
    for comp in _components(masks, inst.bm):
        solver = _Component(inst, comp, budget)
        local = solver.solve()
        nodes += solver.nodes
        for k, g in enumerate(comp):
            if local >> k & 1:
                mask |= 1 << g
    hit = budget is not None and budget[0] <= 0
    return _solution(inst, mask, iterations=nodes, hit_cap=hit)


# --------------------------------------------------------------------------- #
# Float interval-based local search

def solve_fls(inst: WdpInstance, params: FlsParams = FlsParams()) -> WdpSolution:
    """Greedy fill from the compatible set, then randomised escape moves.

    Each iteration either adds the highest-priced bundle still compatible with
    the candidate solution, or (once none is left) forces in a bundle from
    outside it: with probability ``rho`` one whose price lies within ``sigma``
    of the best outside price, otherwise any outside bundle. Bundles clashing
    with the newcomer are evicted. The incumbent is replaced whenever the
    candidate is at least as valuable; the search stops after ``y`` iterations
    without a strict improvement.
    """
    n = inst.bm
    rng = random.Random(params.rng_seed)
    if n == 0:
        return WdpSolution((), 0.0, frozenset())
    masks = inst.conflict_masks()
    v = inst.vt
    full = (1 << n) - 1

    c = 0
    best, best_value = 0, 0.0
    q_b = full
    stall = 0
    it = 0
    while stall < params.y:
        if it >= params.max_iterations:
            return _solution(inst, best, iterations=it, hit_cap=True)
        it += 1
        if q_b:
            k = max(_bits(q_b), key=lambda i: (v[i], -i))
            c |= 1 << k
        else:
            tem_b = [i for i in range(n) if not c >> i & 1]
            if not tem_b:
                break
            if rng.random() < params.rho:
                v_max = max(v[i] for i in tem_b)
                pool = [i for i in tem_b if abs(v_max - v[i]) <= params.sigma]
            else:
                pool = tem_b
            k = pool[rng.randrange(len(pool))]
            c = (c & ~masks[k]) | (1 << k)
        c_value = sum(v[i] for i in _bits(c))
        if c_value >= best_value - TIE_EPS:
            improved = c_value > best_value + TIE_EPS
            best, best_value = c, c_value
            stall = 0 if improved else stall + 1
        else:
            stall += 1
        blocked = c
        for i in _bits(c):
            blocked |= masks[i]
        q_b = full & ~blocked
    return _solution(inst, best, iterations=it)


def _bits(mask: int) -> List[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out
