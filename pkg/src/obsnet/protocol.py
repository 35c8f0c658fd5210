"""Contract-net negotiation: announcement, bidding, awarding and execution."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Set, Tuple

from .bidding import Bundle, build_bundle, replay_bundle
from .model import BidWeights, Provenance, ScheduledTask, Task
from .wdp import FlsParams, WdpInstance, WdpSolution, solve_exact, solve_fls
from .world import World


class ContractType(str, Enum):
    NEIGHBOR_ROUND = "neighbor_round"
    CENTER_ROUND = "center_round"
    INTER_CENTER_ROUND = "inter_center_round"


class ProtocolError(RuntimeError):
    pass


@dataclass(frozen=True)
class TaskInfo:
    task_id: str
    name: str
    window: Tuple[int, int]
    location: Tuple[float, float]


@dataclass
class TaskDocument:
    contract_id: str
    contract_type: ContractType
    tenderer_id: str
    task_info: List[TaskInfo]
    task_requirement: Dict[str, Tuple[str, float]]
    task_weight: Dict[str, float]
    expire_time: int
    quote_requirement: Tuple[float, float]
    issued_at: int = 0

    @property
    def task_ids(self) -> List[str]:
        return [ti.task_id for ti in self.task_info]

    def to_dict(self) -> dict:
        return {
            "contract_id": self.contract_id,
            "contract_type": self.contract_type.value,
            "tenderer_id": self.tenderer_id,
            "task_info": [{"task_id": ti.task_id, "name": ti.name, "window": list(ti.window),
                           "location": list(ti.location)} for ti in self.task_info],
            "task_requirement": {k: list(v) for k, v in self.task_requirement.items()},
            "task_weight": self.task_weight,
            "expire_time": self.expire_time,
            "quote_requirement": list(self.quote_requirement),
        }


@dataclass
class BidDocument:
    contract_id: str
    bidder_id: str
    bid: bool
    execution_scheme: List[Tuple[str, int, int, float, str]] = field(default_factory=list)
    bid_price: float = 0.0
    task_sequences: List[str] = field(default_factory=list)
    indicators_status: Dict[str, bool] = field(default_factory=dict)
    bundle: Optional[Bundle] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "contract_id": self.contract_id,
            "bidder_id": self.bidder_id,
            "bid": self.bid,
            "execution_scheme": [list(e) for e in self.execution_scheme],
            "bid_price": self.bid_price,
            "task_sequences": list(self.task_sequences),
            "indicators_status": dict(self.indicators_status),
        }


@dataclass
class Contract:
    contract_id: str
    winners: List[str]
    bundles: List[Bundle]
    signed_at: int
    value: float = 0.0
    voided: bool = False

    @property
    def task_ids(self) -> Set[str]:
        return set().union(*(b.task_ids for b in self.bundles)) if self.bundles else set()


@dataclass
class ExecutionDelta:
    contract_id: str
    assigned: List[ScheduledTask] = field(default_factory=list)
    evicted: List[Tuple[str, str]] = field(default_factory=list)  # (task id, resource id)
    returned: Set[str] = field(default_factory=set)
    voided: bool = False
    replayed: bool = False

    @property
    def assigned_ids(self) -> Set[str]:
        return {a.task_id for a in self.assigned}


@dataclass(frozen=True)
class AuctionParams:
    weights: BidWeights = BidWeights()
    fls: FlsParams = FlsParams()
    solver: str = "fls"
    allow_displacement: bool = True
    displacement_ratio: float = 0.5
    negotiation_budget_s: int = 60
    max_bids: int = 10_000


# --------------------------------------------------------------------------- #
# Bidders

class ResourceBidder:
    def __init__(self, resource_id: str, latency_s: int = 0):
        self.id = resource_id
        self.latency_s = latency_s

    def bid(self, world: World, tasks: Sequence[Task], params: AuctionParams) -> Bundle:
        res = world.resources[self.id]
        if res.failed:
            return Bundle(self.id)
        return build_bundle(res, tasks, world.tasks, params.weights, world.pass_model,
                            params.allow_displacement, params.displacement_ratio)


class CenterBidder:
    """A peer planning center answering with one composite bid over its resources."""

    def __init__(self, center_id: str, latency_s: int = 0):
        self.id = center_id
        self.latency_s = latency_s

    def bid(self, world: World, tasks: Sequence[Task], params: AuctionParams) -> Bundle:
        from .mca import center_composite_bid  # cycle: mca builds on this module
        return center_composite_bid(world, world.centers[self.id], tasks, params)


# --------------------------------------------------------------------------- #
# Stages

def announce(world: World, tenderer_id: str, tasks: Sequence[Task],
             contract_type: ContractType, deadline: int,
             weights: BidWeights = BidWeights()) -> TaskDocument:
    if not tasks:
        raise ProtocolError("cannot announce an empty task set")
    if deadline > world.horizon_s:
        raise ProtocolError(f"bid deadline {deadline} lies beyond the horizon {world.horizon_s}")
    ordered = sorted(tasks, key=lambda t: t.id)
    doc = TaskDocument(
        contract_id=world.next_contract_id(),
        contract_type=contract_type,
        tenderer_id=tenderer_id,
        task_info=[TaskInfo(t.id, t.id, (t.window_start, t.window_end), t.location) for t in ordered],
        task_requirement={t.id: (t.required_band.value, t.required_resolution) for t in ordered},
        task_weight={t.id: t.weight for t in ordered},
        expire_time=deadline,
        quote_requirement=(0.0, len(ordered) * (weights.lambda1 + weights.lambda2)),
        issued_at=world.clock,
    )
    world.trace.emit("announce", doc.contract_id, world.clock, {
        "tenderer": tenderer_id, "type": contract_type.value, "tasks": doc.task_ids,
        "expire_time": deadline,
    })
    return doc


def _bid_document(doc: TaskDocument, bidder_id: str, bundle: Bundle,
                  world: World) -> BidDocument:
    if not bundle.is_bid:
        return BidDocument(doc.contract_id, bidder_id, False, bundle=bundle)
    lo, hi = doc.quote_requirement
    price = min(max(bundle.price, lo), hi)
    scheme = []
    for item in bundle.items:
        t = world.tasks[item.task_id]
        scheme.append((item.task_id, item.insertion.exec_start, item.insertion.exec_end,
                       t.required_resolution, t.required_band.value))
    sequence = []
    if bidder_id in world.resources:
        sequence = [s.task_id for s in world.resources[bidder_id].active()]
    status = {"price_in_quote": price == bundle.price}
    for item in bundle.items:
        status[f"{item.task_id}:window"] = True
        status[f"{item.task_id}:requirement"] = True
    return BidDocument(doc.contract_id, bidder_id, True, scheme, price, sequence, status,
                       bundle=replace(bundle, price=price))


def collect_bids(world: World, doc: TaskDocument, bidders: Sequence,
                 params: AuctionParams = AuctionParams()
                 ) -> Tuple[List[frozenset], List[float], List[BidDocument]]:
    """Ask every bidder for a bundle; late and empty bids are left out of GT/VT."""
    tasks = [world.tasks[t] for t in doc.task_ids]
    gt, vt, docs = [], [], []
    for bidder in sorted(bidders, key=lambda b: b.id):
        if doc.issued_at + bidder.latency_s > doc.expire_time:
            bd = BidDocument(doc.contract_id, bidder.id, False,
                             indicators_status={"late": True})
        else:
            bd = _bid_document(doc, bidder.id, bidder.bid(world, tasks, params), world)
        docs.append(bd)
        world.trace.emit("bid", doc.contract_id, world.clock, {
            "bidder": bidder.id, "bid": bd.bid, "price": bd.bid_price,
            "tasks": sorted(bd.bundle.task_ids) if bd.bid else [],
        })
        if bd.bid:
            gt.append(bd.bundle.task_ids)
            vt.append(bd.bid_price)
    return gt, vt, docs


def run_solver(inst: WdpInstance, params: AuctionParams, salt: int = 0) -> WdpSolution:
    if params.solver == "exact":
        return solve_exact(inst, params.max_bids)
    if params.solver == "fls":
        fls = replace(params.fls, rng_seed=params.fls.rng_seed * 1_000_003 + salt)
        return solve_fls(inst, fls)
    raise ProtocolError(f"unknown WDP solver {params.solver!r}")


def award(world: World, doc: TaskDocument, gt: Sequence[frozenset], vt: Sequence[float],
          bids: Sequence[BidDocument], params: AuctionParams = AuctionParams(),
          solver: Optional[Callable[[WdpInstance], WdpSolution]] = None
          ) -> Tuple[Contract, Set[str]]:
    """Pick the winning bundles; returns the contract and the unallocated task ids."""
    if len(gt) != len(vt):
        raise ProtocolError("GT and VT lengths differ")
    live = [b for b in bids if b.bid]
    if len(live) != len(gt):
        raise ProtocolError("bid documents do not line up with GT")
    contract = Contract(doc.contract_id, [], [], world.clock)
    if gt:
        inst = WdpInstance(list(gt), list(vt))
        try:
            sol = solver(inst) if solver else run_solver(inst, params, world.contract_counter)
        except Exception as exc:  # a failed solve allocates nothing this round
            world.trace.emit("fault", doc.contract_id, world.clock, {"error": repr(exc)})
            sol = None
        if sol is not None:
            for i in sol.selected:
                contract.winners.append(live[i].bidder_id)
                contract.bundles.append(live[i].bundle)
            contract.value = sol.value
    unallocated = set(doc.task_ids) - contract.task_ids
    world.trace.emit("award", doc.contract_id, world.clock, {
        "winners": contract.winners, "value": contract.value,
        "tasks": sorted(contract.task_ids), "unallocated": sorted(unallocated),
    })
    return contract, unallocated


def _parts(contract: Contract) -> List[Tuple[str, Bundle]]:
    out = []
    for winner, bundle in zip(contract.winners, contract.bundles):
        if bundle.parts:
            out.extend(bundle.parts)
        else:
            out.append((winner, bundle))
    return out


def execute_contract(world: World, contract: Contract, round_no: int = 0,
                     method: str = "mca") -> ExecutionDelta:
    """Revalidate every awarded bundle, then insert its tasks into the winners' routes.

    The contract is all-or-nothing: if any winner can no longer carry its
    bundle, nothing is committed and the tasks go back to the pool.
    """
    delta = ExecutionDelta(contract.contract_id)
    if contract.contract_id in world.executed_contracts:
        delta.replayed = True
        return delta
    world.executed_contracts.add(contract.contract_id)
    parts = _parts(contract)
    for rid, bundle in parts:
        res = world.resources.get(rid)
        if res is None or res.failed or replay_bundle(res, bundle, world.tasks, world.pass_model) is None:
            contract.voided = True
            delta.voided = True
            delta.returned = set(contract.task_ids)
            world.trace.emit("void", contract.contract_id, world.clock, {"resource": rid})
            return delta

    prov = Provenance(round_no, method, contract.contract_id)
    for rid, bundle in parts:
        for item in bundle.items:
            for victim in item.displaced:
                world.reclaim(rid, victim, contract.contract_id, why="displaced")
                delta.evicted.append((victim, rid))
            entry = world.insert(rid, item.task_id, contract.contract_id, prov)
            assert entry is not None, "replay_bundle guaranteed feasibility"
            delta.assigned.append(entry)
    world.trace.emit("execute", contract.contract_id, world.clock, {
        "assigned": sorted((e.task_id, e.resource_id) for e in delta.assigned),
        "evicted": sorted(delta.evicted),
    })
    return delta
