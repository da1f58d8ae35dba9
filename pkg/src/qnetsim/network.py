"""Repeater networks: topology, least-cost routing, end-to-end entanglement
delivery over swap chains, and sharing links between concurrent requests."""
from __future__ import annotations

import dataclasses
import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg as la
from .channels import memory_decay
from .entangled import BellLabel, BELL_FRAME
from .errors import ConfigInvalid, Unroutable
from .linklayer import (
    LinkSpec,
    attempt_period,
    herald_probability,
    link_cost,
    purification_plan,
    expected_raw_fidelity,
    run_link,
)
from .photonics import ONE_WAY_S_PER_M
from .protocols.purify import purify
from .protocols.swap import entanglement_swap
from .qstate import DensityMatrix, fidelity
from .rng import make_rng

PHI_PLUS = BellLabel.PhiPlus.vector


@dataclass(frozen=True)
class NodeSpec:
    id: str
    memory_count: int = 2
    T1: float = math.inf
    T2: float = math.inf

    def __post_init__(self):
        if not self.id:
            raise ConfigInvalid("node id must be non-empty")
        if self.memory_count < 1:
            raise ConfigInvalid(f"node {self.id} needs at least one memory")
        if not (self.T1 > 0 and self.T2 > 0):
            raise ConfigInvalid(f"node {self.id} needs positive T1 and T2")


@dataclass(frozen=True)
class LinkEntry:
    a: str
    b: str
    spec: LinkSpec = field(default_factory=LinkSpec)
    cost: float | None = None  # fixed routing weight; None uses link_cost

    @property
    def key(self) -> tuple[str, str]:
        return (self.a, self.b) if self.a <= self.b else (self.b, self.a)


def link_key(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a <= b else (b, a)


class Topology:
    """Nodes and undirected links. Memory T1/T2 come from the node specs."""

    def __init__(self, nodes, links):
        self.nodes = {}
        for n in nodes:
            if n.id in self.nodes:
                raise ConfigInvalid(f"duplicate node {n.id}")
            self.nodes[n.id] = n
        self.links = {}
        for e in links:
            if e.a not in self.nodes or e.b not in self.nodes:
                raise ConfigInvalid(f"link {e.a}-{e.b} references an unknown node")
            if e.a == e.b:
                raise ConfigInvalid(f"self-link on {e.a}")
            if e.key in self.links:
                raise ConfigInvalid(f"duplicate link {e.a}-{e.b}")
            if e.cost is not None and not e.cost >= 0:
                raise ConfigInvalid(f"link {e.a}-{e.b} cost must be non-negative")
            self.links[e.key] = e
        self._adj = {nid: [] for nid in self.nodes}
        for a, b in self.links:
            self._adj[a].append(b)
            self._adj[b].append(a)
        for nbrs in self._adj.values():
            nbrs.sort()

    def neighbors(self, node: str) -> list[str]:
        return self._adj[node]

    def link_spec(self, a: str, b: str) -> LinkSpec:
        """The link oriented from ``a`` (left) to ``b`` (right), with node memories."""
        e = self.links[link_key(a, b)]
        spec = e.spec
        if e.a != a and spec.architecture != "MM":
            spec = dataclasses.replace(spec, bsa_position_km=spec.length_km - spec.bsa_position_km)
        na, nb = self.nodes[a], self.nodes[b]
        return dataclasses.replace(spec, memory_T1_s=(na.T1, nb.T1), memory_T2_s=(na.T2, nb.T2))

    def link_weight(self, a: str, b: str, threshold: float | None = None) -> float:
        e = self.links[link_key(a, b)]
        if e.cost is not None:
            return float(e.cost)
        spec = self.link_spec(a, b)
        if threshold is not None:
            spec = dataclasses.replace(spec, threshold_fidelity=threshold)
        return link_cost(spec).seconds_per_bell_pair_at_threshold

    def with_link(self, entry: LinkEntry) -> "Topology":
        return Topology(self.nodes.values(), [*self.links.values(), entry])

    def length_km(self, a: str, b: str) -> float:
        return self.links[link_key(a, b)].spec.length_km


@dataclass(frozen=True)
class Request:
    src: str
    dst: str
    pairs_wanted: int = 1
    F_min: float = 0.9

    def __post_init__(self):
        if self.src == self.dst:
            raise ConfigInvalid("request endpoints must differ")
        if self.pairs_wanted < 1:
            raise ConfigInvalid("pairs_wanted must be at least 1")
        if not 0.5 < self.F_min <= 1.0:
            raise ConfigInvalid("F_min must lie in (0.5, 1]")


@dataclass(frozen=True)
class RouteResult:
    path: tuple
    total_cost_s: float
    per_link_costs: tuple


def route(topo: Topology, request: Request, weight=None) -> RouteResult:
    """Least total cost path; equal-cost paths are ordered by their node-id sequence.

    ``weight(a, b)`` overrides the per-link cost; the default is each link's
    fixed cost if given, else seconds per Bell pair at ``request.F_min``.
    """
    for n in (request.src, request.dst):
        if n not in topo.nodes:
            raise ConfigInvalid(f"unknown node {n}")
    if weight is None:
        cache = {}

        def weight(a, b):
            k = link_key(a, b)
            if k not in cache:
                cache[k] = topo.link_weight(a, b, request.F_min)
            return cache[k]

    best = {request.src: (0.0, (request.src,))}
    heap = [(0.0, (request.src,))]
    done = set()
    while heap:
        cost, path = heapq.heappop(heap)
        node = path[-1]
        if node in done:
            continue
        done.add(node)
        if node == request.dst:
            costs = tuple(weight(a, b) for a, b in zip(path, path[1:]))
            return RouteResult(path, cost, costs)
        for nxt in topo.neighbors(node):
            if nxt in done:
                continue
            cand = (cost + weight(node, nxt), path + (nxt,))
            if nxt not in best or cand < best[nxt]:
                best[nxt] = cand
                heapq.heappush(heap, cand)
    raise Unroutable(f"no path from {request.src} to {request.dst}")


# End-to-end delivery -------------------------------------------------------------------


@dataclass(frozen=True)
class SwapLogEntry:
    node: str
    outcome: BellLabel
    correction: str
    probability: float
    t_swap: float
    t_notified: float
    span: tuple
    raw_pair: DensityMatrix = field(repr=False)
    corrected_pair: DensityMatrix = field(repr=False)

    def to_record(self) -> dict:
        return {
            "node": self.node,
            "outcome": self.outcome.value,
            "correction": self.correction,
            "probability": self.probability,
            "t_swap": self.t_swap,
            "t_notified": self.t_notified,
            "span": list(self.span),
        }


@dataclass(frozen=True)
class LinkPairRecord:
    link: tuple
    attempts: int
    purification_rounds: int
    t_ready: float
    fidelity: float


@dataclass(frozen=True)
class EndToEndResult:
    path: tuple
    final_pairs: list
    fidelities: list
    elapsed_s: float
    swap_log: list
    link_log: list
    delivery_times: list


@dataclass
class _Segment:
    left: int
    right: int
    rho: DensityMatrix
    t_state: float  # time at which rho describes the memories
    t_ready: float  # time both ends know the frame


def _path_distance_m(topo, path, i, j) -> float:
    lo, hi = min(i, j), max(i, j)
    return 1000.0 * sum(topo.length_km(path[k], path[k + 1]) for k in range(lo, hi))


def _age(topo, path, seg: _Segment, t: float) -> DensityMatrix:
    wait = t - seg.t_state
    if wait <= 0:
        return seg.rho
    rho = seg.rho
    for q, idx in ((0, seg.left), (1, seg.right)):
        node = topo.nodes[path[idx]]
        rho = memory_decay(rho, wait, node.T1, node.T2, (q,))
    return rho


def _frame_fix(rho: DensityMatrix, label: BellLabel) -> DensityMatrix:
    """Rotate a pair heralded as ``label`` into the Phi+ frame (Pauli on the right memory)."""
    p = la.pauli_word(BELL_FRAME[label]).conj().T
    full = np.kron(la.I2, p)
    return DensityMatrix(full @ rho.mat @ full.conj().T, check=False)


class _LinkSource:
    """Produces Phi+-framed pairs on one link, purifying up to a target fidelity."""

    def __init__(self, topo, a, b, F_min, rng):
        self.topo, self.a, self.b = topo, a, b
        self.spec = dataclasses.replace(topo.link_spec(a, b), threshold_fidelity=F_min)
        self.rounds = purification_plan(expected_raw_fidelity(self.spec), F_min)[0]
        self.rng = rng
        self.clock = 0.0
        self.next_slot = 0.0  # earliest start of the next attempt
        self.period = attempt_period(self.spec)
        self.attempts = 0
        self.one_way = self.spec.length_km * 1000.0 * ONE_WAY_S_PER_M

    def _age(self, rho, wait):
        if wait <= 0:
            return rho
        na, nb = self.topo.nodes[self.a], self.topo.nodes[self.b]
        rho = memory_decay(rho, wait, na.T1, na.T2, (0,))
        return memory_decay(rho, wait, nb.T1, nb.T2, (1,))

    def raw_pair(self):
        traces = run_link(self.spec, self.rng, t_start=max(self.clock, self.next_slot))
        last = traces[-1]
        self.attempts += len(traces)
        self.clock = last.t_heralded
        self.next_slot = last.t_emit + self.period
        return _frame_fix(last.post_pair, last.pair_label), last.t_heralded

    def pair(self, level=None):
        level = self.rounds if level is None else level
        if level == 0:
            return self.raw_pair()
        while True:
            rho1, t1 = self.pair(level - 1)
            rho2, t2 = self.pair(level - 1)
            rho1 = self._age(rho1, t2 - t1)
            res = purify(rho1, rho2, self.rng)
            # both sides exchange their measurement results
            t_done = t2 + self.one_way
            self.clock = max(self.clock, t_done)
            if res.kept:
                return self._age(res.post, self.one_way), t_done


def _check_memories(topo, path, rounds_by_link):
    for i, node in enumerate(path):
        need = 0
        for j in (i - 1, i):
            if 0 <= j < len(path) - 1:
                need += 2 if rounds_by_link[j] > 0 else 1
        if topo.nodes[node].memory_count < need:
            raise ConfigInvalid(
                f"node {node} needs {need} memories on this route but has "
                f"{topo.nodes[node].memory_count}"
            )


def end_to_end(topo: Topology, request: Request, rng, order: str = "sequential", path=None) -> EndToEndResult:
    """Deliver ``request.pairs_wanted`` Phi+-framed pairs between the endpoints.

    Links on the path generate (and if needed purify) pairs in parallel; the
    middle nodes then swap, left to right by default (``order="balanced"``
    swaps neighbours pairwise in rounds instead). Each swap's outcome has to
    reach both ends of the new pair, at 5 ns per meter of fiber, before that
    pair can be used again. Memories decohere while they wait.
    """
    if order not in ("sequential", "balanced"):
        raise ConfigInvalid("order must be 'sequential' or 'balanced'")
    rng = make_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    path = tuple(path) if path is not None else route(topo, request).path
    hops = list(zip(path, path[1:]))
    sources = [_LinkSource(topo, a, b, request.F_min, rng) for a, b in hops]
    _check_memories(topo, path, [s.rounds for s in sources])

    pairs, fids, swap_log, link_log, times = [], [], [], [], []
    t_start = 0.0
    for _ in range(request.pairs_wanted):
        segs = []
        for i, src in enumerate(sources):
            src.clock = max(src.clock, t_start)
            before = src.attempts
            rho, t_ready = src.pair()
            link_log.append(
                LinkPairRecord(hops[i], src.attempts - before, src.rounds, t_ready, fidelity(rho, PHI_PLUS))
            )
            segs.append(_Segment(i, i + 1, rho, t_ready, t_ready))

        def merge(s1: _Segment, s2: _Segment) -> _Segment:
            t = max(s1.t_ready, s2.t_ready)
            res = entanglement_swap(_age(topo, path, s1, t), _age(topo, path, s2, t), rng)
            k = s1.right
            notify = ONE_WAY_S_PER_M * max(
                _path_distance_m(topo, path, k, s1.left), _path_distance_m(topo, path, k, s2.right)
            )
            swap_log.append(
                SwapLogEntry(path[k], res.outcome, res.correction, res.probability, t, t + notify,
                             (path[s1.left], path[s2.right]), res.state_ac, res.corrected_ac)
            )
            return _Segment(s1.left, s2.right, res.corrected_ac, t, t + notify)

        while len(segs) > 1:
            if order == "sequential":
                segs = [merge(segs[0], segs[1])] + segs[2:]
            else:
                nxt = [merge(segs[i], segs[i + 1]) for i in range(0, len(segs) - 1, 2)]
                if len(segs) % 2:
                    nxt.append(segs[-1])
                segs = nxt
        final = segs[0]
        rho = _age(topo, path, final, final.t_ready)
        pairs.append(rho)
        fids.append(fidelity(rho, PHI_PLUS))
        times.append(final.t_ready)
        t_start = final.t_ready
    return EndToEndResult(path, pairs, fids, t_start, swap_log, link_log, times)


def notification_floor_s(topo: Topology, path) -> float:
    """Sum of one-way fiber delays over every hop of ``path``."""
    return ONE_WAY_S_PER_M * _path_distance_m(topo, tuple(path), 0, len(path) - 1)


# Multiplexing ----------------------------------------------------------------------------

SCHEMES = ("round_robin_td", "greedy_fcfs")


@dataclass(frozen=True)
class LinkUsage:
    link: tuple
    users: int
    generated: int
    consumed: int
    idle_attempts: int


@dataclass(frozen=True)
class MultiplexReport:
    scheme: str
    horizon_s: float
    routes: tuple
    delivered: tuple
    throughput: tuple
    links: dict
    max_contention_link: tuple
    starvation: bool
    starved: tuple


def multiplex(topo: Topology, requests, scheme: str, horizon_s: float, rng, routes=None) -> MultiplexReport:
    """Share link-level entanglement among concurrent requests for ``horizon_s`` seconds.

    Every link attempts at its own period and heralds with its own success
    probability. Each attempt is made on behalf of one request:

    * ``round_robin_td``: attempt slots rotate over the link's users; a slot
      whose owner already holds a pair on this link stays idle.
    * ``greedy_fcfs``: the attempt goes to the user without a pair on this
      link that has waited longest since its last delivery.

    A heralded pair occupies one memory at each end until the request holds a
    pair on every link of its route; then all are swapped into one delivery
    and the memories are freed. Attempts are skipped while either end node has
    no free memory. Swap latency and fidelity are not modeled here.
    """
    if scheme not in SCHEMES:
        raise ConfigInvalid(f"scheme must be one of {SCHEMES}")
    if horizon_s <= 0:
        raise ConfigInvalid("horizon must be positive")
    requests = list(requests)
    if not requests:
        raise ConfigInvalid("at least one request is required")
    rng = make_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    if routes is None:
        routes = [route(topo, r).path for r in requests]
    routes = [tuple(p) for p in routes]
    req_links = [[link_key(a, b) for a, b in zip(p, p[1:])] for p in routes]

    users = {}
    for r, links in enumerate(req_links):
        for k in links:
            users.setdefault(k, []).append(r)
    keys = sorted(users)
    period = {k: attempt_period(topo.link_spec(*k)) for k in keys}
    p_ok = {k: herald_probability(topo.link_spec(*k)) for k in keys}

    held = {(r, k): False for r, links in enumerate(req_links) for k in links}
    mem_used = {n: 0 for n in topo.nodes}
    delivered = [0] * len(requests)
    last_delivery = [0.0] * len(requests)
    generated = {k: 0 for k in keys}
    consumed = {k: 0 for k in keys}
    idle = {k: 0 for k in keys}
    slot = {k: 0 for k in keys}

    heap = [(0.0, i, k) for i, k in enumerate(keys)]
    heapq.heapify(heap)
    while heap:
        t, i, k = heapq.heappop(heap)
        if t >= horizon_s:
            continue
        heapq.heappush(heap, (t + period[k], i, k))
        a, b = k
        owner = None
        if scheme == "round_robin_td":
            cand = users[k][slot[k] % len(users[k])]
            slot[k] += 1
            if not held[(cand, k)]:
                owner = cand
        else:
            free = [r for r in users[k] if not held[(r, k)]]
            if free:
                owner = min(free, key=lambda r: (last_delivery[r], r))
        if owner is None or mem_used[a] >= topo.nodes[a].memory_count or mem_used[b] >= topo.nodes[b].memory_count:
            idle[k] += 1
            continue
        if rng.random() >= p_ok[k]:
            continue
        generated[k] += 1
        held[(owner, k)] = True
        mem_used[a] += 1
        mem_used[b] += 1
        if all(held[(owner, kk)] for kk in req_links[owner]):
            for kk in req_links[owner]:
                held[(owner, kk)] = False
                consumed[kk] += 1
                mem_used[kk[0]] -= 1
                mem_used[kk[1]] -= 1
            delivered[owner] += 1
            last_delivery[owner] = t

    usage = {k: LinkUsage(k, len(users[k]), generated[k], consumed[k], idle[k]) for k in keys}
    max_link = min(keys, key=lambda k: (-len(users[k]), k))
    mean = sum(delivered) / len(delivered)
    starved = tuple(r for r, d in enumerate(delivered) if d == 0)
    starvation = bool(starved) and any(d >= 2 * mean and d > 0 for d in delivered)
    return MultiplexReport(
        scheme, horizon_s, tuple(routes), tuple(delivered),
        tuple(d / horizon_s for d in delivered), usage, max_link, starvation, starved,
    )
