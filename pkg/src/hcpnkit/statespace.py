"""Occurrence graphs and the liveness/boundedness analyses built on them."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .engine import BindingElement, successors
from .kernel import Marking, Multiset, canonical_key
from .netmodel.model import FlatNet

DEFAULT_MAX_NODES = 1_000_000


class IncompleteGraphError(Exception):
    """An analysis that needs the full state space was asked about a
    graph whose exploration ran out of budget."""


@dataclass
class OccurrenceGraph:
    net: FlatNet
    nodes: List[Marking]
    edges: List[Tuple[int, BindingElement, int]]
    initial: int
    max_nodes: int
    exhausted: bool = False
    out: List[List[int]] = field(default_factory=list)  # edge indices per node

    def __post_init__(self):
        if not self.out:
            self.out = [[] for _ in self.nodes]
            for i, (s, _, _) in enumerate(self.edges):
                self.out[s].append(i)

    def successors(self, n: int) -> List[int]:
        return [self.edges[i][2] for i in self.out[n]]

    def require_complete(self, what: str = "this analysis"):
        if self.exhausted:
            raise IncompleteGraphError(
                f"{what} needs the complete state space, but exploration stopped at "
                f"{self.max_nodes} nodes (raise --max-nodes)")


def explore(net: FlatNet, max_nodes: int = DEFAULT_MAX_NODES, workers: int = 1) -> OccurrenceGraph:
    """Breadth-first construction of the occurrence graph.

    Each BFS level is expanded (optionally on a thread pool) and then merged
    sequentially in canonical-key order, so the resulting graph does not
    depend on ``workers``. Exploration stops once ``max_nodes`` markings are
    known; the graph is then flagged as exhausted.
    """
    if max_nodes < 1:
        raise ValueError("max_nodes must be at least 1")
    keys: Dict[bytes, int] = {}
    markings: List[Marking] = []
    raw_edges: List[Tuple[int, BindingElement, int]] = []

    def add(m: Marking, k: bytes) -> int:
        keys[k] = len(markings)
        markings.append(m)
        return keys[k]

    add(net.initial, canonical_key(net.initial))
    frontier = [0]
    exhausted = False
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        while frontier and not exhausted:
            frontier.sort(key=lambda i: canonical_key(markings[i]))
            expand = lambda i: successors(net, markings[i])  # noqa: E731
            results = list(pool.map(expand, frontier)) if pool else [expand(i) for i in frontier]
            nxt = []
            for src, succ in zip(frontier, results):
                for be, m in succ:
                    k = canonical_key(m)
                    dst = keys.get(k)
                    if dst is None:
                        if len(markings) >= max_nodes:
                            exhausted = True
                            continue
                        dst = add(m, k)
                        nxt.append(dst)
                    raw_edges.append((src, be, dst))
            frontier = nxt
    finally:
        if pool:
            pool.shutdown()

    # Renumber by canonical key so ids are independent of discovery order.
    order = sorted(range(len(markings)), key=lambda i: canonical_key(markings[i]))
    renum = {old: new for new, old in enumerate(order)}
    nodes = [markings[i] for i in order]
    edges = sorted(((renum[s], be, renum[d]) for s, be, d in raw_edges),
                   key=lambda e: (e[0], e[1].sort_key(), e[2]))
    return OccurrenceGraph(net, nodes, edges, renum[0], max_nodes, exhausted)


def dead_markings(g: OccurrenceGraph) -> List[int]:
    g.require_complete("dead-marking analysis")
    return [n for n in range(len(g.nodes)) if not g.out[n]]


def transition_liveness(g: OccurrenceGraph) -> Tuple[List[str], List[str]]:
    """(dead, live) transition names; live means labelling at least one edge."""
    g.require_complete("transition liveness")
    live = {be.transition for _, be, _ in g.edges}
    names = sorted(g.net.transitions)
    return [t for t in names if t not in live], [t for t in names if t in live]


@dataclass(frozen=True)
class PlaceBound:
    integer: int
    multiset: Multiset


def place_bounds(g: OccurrenceGraph) -> Tuple[Dict[str, PlaceBound], Dict[str, int]]:
    """Per-place integer and multiset bounds, plus per page instance the
    largest number of tokens held at once by the places it owns."""
    g.require_complete("bounds analysis")
    places = g.net.place_names
    integer = {p: 0 for p in places}
    per_value: Dict[str, Dict[object, int]] = {p: {} for p in places}
    owner = {p: g.net.places[p].instance for p in places}
    page_bound = {inst: 0 for inst in g.net.instances}
    for m in g.nodes:
        totals = dict.fromkeys(page_bound, 0)
        for p, ms in m.items():
            size = ms.size()
            if size > integer[p]:
                integer[p] = size
            totals[owner[p]] += size
            pv = per_value[p]
            for v, n in ms.items():
                if n > pv.get(v, 0):
                    pv[v] = n
        for inst, n in totals.items():
            if n > page_bound[inst]:
                page_bound[inst] = n
    bounds = {p: PlaceBound(integer[p], Multiset(per_value[p].items(), g.net.places[p].colorset.name))
              for p in places}
    return bounds, page_bound


@dataclass
class AnalysisReport:
    nodes: int
    edges: int
    exhausted: bool
    initial: int
    dead_markings: Optional[List[int]] = None
    dead_transitions: Optional[List[str]] = None
    live_transitions: Optional[List[str]] = None
    bounds: Optional[Dict[str, PlaceBound]] = None
    page_bounds: Optional[Dict[str, int]] = None


def analyze(g: OccurrenceGraph) -> AnalysisReport:
    """Everything the analyses can say; on an exhausted graph only the
    counts are filled in."""
    r = AnalysisReport(len(g.nodes), len(g.edges), g.exhausted, g.initial)
    if not g.exhausted:
        r.dead_markings = dead_markings(g)
        r.dead_transitions, r.live_transitions = transition_liveness(g)
        r.bounds, r.page_bounds = place_bounds(g)
    return r

