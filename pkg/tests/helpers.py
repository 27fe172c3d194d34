"""Generators and brute-force oracles shared by the test modules.

The oracles deliberately avoid the engine's pattern matcher: enabling is
decided by trying every assignment of candidate values to a transition's
variables and comparing evaluated arc multisets against the marking.
"""
from __future__ import annotations

import itertools
import random
from pathlib import Path
from typing import Dict, List, Set

from hcpnkit.exprlang import eval_expr, eval_multiset
from hcpnkit.kernel import Marking, Multiset, typecheck_value
from hcpnkit.netmodel import FlatNet, load_model

FIXTURES = Path(__file__).parent / "fixtures"

# PASS/FAIL lines from the acceptance tests, echoed by conftest at the end
ACCEPTANCE_LINES: List[str] = []

# ---------------------------------------------------------------------------
# Random bounded nets

_PATTERNS = ["1`x"] * 4 + ["1`y"] * 2 + ["1`0", "1`1", "2`x", "1`x ++ 1`y"]
_GUARDS = ["x <> y", "x = 1", "x < 2", "y >= 1", "not (x = 0)", "x + 1 = y"]


def _count(pattern: str) -> int:
    return sum(int(term.split("`")[0]) for term in pattern.split("++"))


def random_net_text(rng: random.Random, max_places=4, max_transitions=4, max_tokens=6) -> str:
    """A token-conserving net over INT with values in 0..2, so the state
    space is finite."""
    n_places = rng.randint(1, max_places)
    places = [f"p{i}" for i in range(n_places)]
    init: Dict[str, List[int]] = {p: [] for p in places}
    for _ in range(rng.randint(1, max_tokens)):
        init[rng.choice(places)].append(rng.randint(0, 2))
    lines = ["colorset INT = int;", "var x, y : INT;", "main N;", "page N {"]
    for p in places:
        toks = " ++ ".join(f"1`{v}" for v in init[p])
        lines.append(f"  place {p} : INT" + (f" init {toks}" if toks else "") + ";")
    for ti in range(rng.randint(1, max_transitions)):
        t = f"t{ti}"
        marked = [p for p in places if init[p]]
        ins = [(rng.choice(marked if k == 0 else places), rng.choice(_PATTERNS))
               for k in range(rng.randint(1, 2))]
        used = {v for _, pat in ins for v in ("x", "y") if v in pat}
        guards = [g for g in _GUARDS if {v for v in ("x", "y") if v in g} <= used]
        guard = rng.choice(guards) if guards and rng.random() < 0.35 else None
        lines.append(f"  trans {t}" + (f" guard {guard}" if guard else "") + ";")
        for p, pat in ins:
            lines.append(f"  arc {p} -> {t} : {pat};")
        total = sum(_count(pat) for _, pat in ins)
        atoms = sorted(used) + ["0", "1", "2"]
        for _ in range(total):
            lines.append(f"  arc {t} -> {rng.choice(places)} : 1`{rng.choice(atoms)};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def random_net(seed: int, **kw) -> FlatNet:
    return load_model(random_net_text(random.Random(seed), **kw))


PRODUCER = """
colorset INT = int;
main Producer;
page Producer {
  place out : INT;
  trans make;
  arc make -> out : 1`1;
}
"""

# ---------------------------------------------------------------------------
# Brute-force token game


def _subvalues(v, acc: Set):
    acc.add(v)
    if isinstance(v, tuple):
        for c in v:
            _subvalues(c, acc)


def oracle_bindings(net: FlatNet, m: Marking, tname: str) -> List[Dict]:
    """Every binding of ``tname`` enabled in ``m``, by exhaustive search over
    values occurring in the marking."""
    t = net.transitions[tname]
    candidates: Set = set()
    for _, ms in m.items():
        for v in ms.support():
            _subvalues(v, candidates)
    names = sorted(t.variables)
    domains = [sorted((c for c in candidates if typecheck_value(c, net.variables[n])), key=repr)
               for n in names]
    found = []
    for combo in itertools.product(*domains):
        b = dict(zip(names, combo))
        need: Dict[str, Dict] = {}
        for place, e in t.inputs:
            for v, n in eval_multiset(e, b).items():
                need.setdefault(place, {})
                need[place][v] = need[place].get(v, 0) + n
        if any(m[p].count(v) < n for p, vs in need.items() for v, n in vs.items()):
            continue
        if t.guard is not None and eval_expr(t.guard, b) is not True:
            continue
        found.append(b)
    return found


def oracle_fire(net: FlatNet, m: Marking, tname: str, binding: Dict) -> Marking:
    t = net.transitions[tname]
    counts = {p: dict(ms.items()) for p, ms in m.items()}
    for place, e in t.inputs:
        for v, n in eval_multiset(e, binding).items():
            counts[place][v] -= n
            assert counts[place][v] >= 0
    for place, e in t.outputs:
        for v, n in eval_multiset(e, binding).items():
            counts[place][v] = counts[place].get(v, 0) + n
    return Marking({p: Multiset(c) for p, c in counts.items()}, m.places)


def oracle_reachable(net: FlatNet, limit: int = 100_000) -> Set[Marking]:
    """All reachable markings by recursive depth-first search."""
    seen: Set[Marking] = set()

    def visit(m: Marking):
        if m in seen:
            return
        if len(seen) >= limit:
            raise RuntimeError("oracle state space too large")
        seen.add(m)
        for tname in sorted(net.transitions):
            for b in oracle_bindings(net, m, tname):
                visit(oracle_fire(net, m, tname, b))

    visit(net.initial)
    return seen


def oracle_bounds(net: FlatNet, markings) -> Dict[str, tuple]:
    out = {}
    for p in net.place_names:
        integer = max(m[p].size() for m in markings)
        per = {}
        for m in markings:
            for v, n in m[p].items():
                per[v] = max(per.get(v, 0), n)
        out[p] = (integer, per)
    return out


# ---------------------------------------------------------------------------
# Random labelled graphs for the logic oracle


class Atom:
    """NF predicate over a node label set."""

    def __init__(self, name):
        self.name = name

    def holds(self, labels):
        return self.name in labels

    def __repr__(self):
        return f"Atom({self.name})"


class LabelledGraph:
    def __init__(self, labels: List[frozenset], edges: List[tuple]):
        self.nodes = labels
        self.edges = edges
        self.exhausted = False
        self.initial = 0
        self._succ = [[] for _ in labels]
        for s, d in edges:
            self._succ[s].append(d)

    def successors(self, i):
        return list(self._succ[i])


def random_graph(rng: random.Random, max_nodes=8, max_edges=16) -> LabelledGraph:
    n = rng.randint(1, max_nodes)
    labels = [frozenset(a for a in ("p", "q") if rng.random() < 0.5) for _ in range(n)]
    edges = [(rng.randrange(n), rng.randrange(n)) for _ in range(rng.randint(0, max_edges))]
    return LabelledGraph(labels, edges)


def brute_eu(g: LabelledGraph, f: Set[int], h: Set[int]) -> Set[int]:
    """Nodes with a simple path through f-nodes ending in an h-node."""
    out = set()
    for start in range(len(g.nodes)):
        def dfs(n, seen):
            if n in h:
                return True
            if n not in f:
                return False
            return any(dfs(k, seen | {k}) for k in g.successors(n) if k not in seen)
        if dfs(start, {start}):
            out.add(start)
    return out


def brute_au(g: LabelledGraph, f: Set[int], h: Set[int]) -> Set[int]:
    """Nodes where no maximal path avoids the until: a path escaping it
    either hits a node with neither f nor h, stops at a deadlock before
    any h, or loops forever among f-and-not-h nodes."""
    out = set()
    for start in range(len(g.nodes)):
        def bad(n, path):
            if n in h:
                return False
            if n not in f:
                return True
            succ = g.successors(n)
            if not succ:
                return True
            for k in succ:
                if k in path or bad(k, path | {k}):
                    return True
            return False
        if not bad(start, {start}):
            out.add(start)
    return out


def brute_reachable(g: LabelledGraph, start: int) -> Set[int]:
    seen = {start}
    stack = [start]
    while stack:
        n = stack.pop()
        for k in g.successors(n):
            if k not in seen:
                seen.add(k)
                stack.append(k)
    return seen


def brute_along(g: LabelledGraph, f: Set[int]) -> Set[int]:
    """Nodes with a maximal path staying inside f forever."""
    out = set()
    for start in range(len(g.nodes)):
        def ok(n, path):
            if n not in f:
                return False
            succ = g.successors(n)
            if not succ:
                return True
            return any(k in path or ok(k, path | {k}) for k in succ)
        if ok(start, {start}):
            out.add(start)
    return out


# ---------------------------------------------------------------------------
# Graph comparison across renamings


def canonical_form(g, place_map, trans_map):
    """Edge set of ``g`` with markings and transitions renamed, independent
    of node numbering."""
    def mk(m):
        return tuple(sorted((place_map(p), ms.encode()) for p, ms in m.items()))
    nodes = frozenset(mk(m) for m in g.nodes)
    edges = frozenset((mk(g.nodes[s]), trans_map(be.transition), be.binding, mk(g.nodes[d]))
                      for s, be, d in g.edges)
    return nodes, edges, mk(g.nodes[g.initial])


def hier_to_inline(main: str):
    """Map ``Main.A.B.x`` to ``Main.A__B__x`` (the naming of the inlined fixtures)."""
    def f(name: str) -> str:
        rest = name[len(main) + 1:]
        return f"{main}.{rest.replace('.', '__')}"
    return f


def identity(name):
    return name


# ---------------------------------------------------------------------------
# Seeded wiring mutations of the layer templates


def _mutable_template(builtin: str):
    from hcpnkit import models
    from hcpnkit.netmodel import parse_model
    return parse_model(models.load_builtin(builtin)), models.spec_for_builtin(builtin)


def wiring_mutations(seed: int = 0):
    """Six broken copies of the templates: two each of a removed port, a
    flipped direction and a port bound to the wrong peer. Yields
    ``(description, model, spec, expected diagnostic code)``."""
    import copy
    import dataclasses

    rng = random.Random(seed)
    layers = ["fomav_physical_world", "fomav_virtual_world", "fomav_metaverse_engine"]
    out = []
    for kind, code in (("remove", "missing required port"), ("flip", "wrong direction"),
                       ("peer", "peer mismatch")):
        for _ in range(2):
            m, spec = _mutable_template(rng.choice(layers))
            m = copy.deepcopy(m)
            main = m.pages[m.main]
            candidates = sorted(n for n in spec if len(spec[n].ports) >= (2 if kind == "peer" else 1))
            sub_name = rng.choice(candidates)
            sub = main.substitutions[sub_name]
            page = m.pages[sub.subpage]
            ports = sorted(spec[sub_name].ports)
            port = rng.choice(ports)
            if kind == "remove":
                page.places[port] = dataclasses.replace(page.places[port], port="none")
            elif kind == "flip":
                old = page.places[port]
                page.places[port] = dataclasses.replace(old, port="out" if old.port == "in" else "in")
            else:
                other = rng.choice([p for p in ports if p != port])
                sockets = dict((p, s) for s, p in sub.socket_map)
                sockets[port], sockets[other] = sockets[other], sockets[port]
                main.substitutions[sub_name] = dataclasses.replace(
                    sub, socket_map=tuple((s, p) for p, s in sorted(sockets.items())))
            out.append((f"{kind} {sub_name}.{port}", m, spec, code))
    return out
