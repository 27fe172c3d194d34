"""Branching-time model checking (ASK-CTL state formulas) over occurrence
graphs, with a small property-script language.

Paths are maximal: a node without successors has exactly one path, the
one that stays there. Property scripts look like::

    pred busy := size(mark("Top.queue")) >= 2;
    prop Safe := INV(NOT(NF("overloaded", busy)));
    eval Safe at init;
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Set, Tuple

from .exprlang import (Env, SourceError, Token, TokenStream, eval_multiset, free_vars,
                       parse_tokens, tokenize)
from .kernel import Marking, Multiset, format_multiset, ms_leq
from .netmodel.model import FlatNet
from .statespace import IncompleteGraphError

UNNAMED = "(unnamed)"


class PropError(SourceError):
    pass


# ---------------------------------------------------------------------------
# Predicates on a single marking


class Predicate:
    def holds(self, m: Marking) -> bool:
        raise NotImplementedError


@dataclass(frozen=True)
class MarkCompare(Predicate):
    place: str
    op: str  # "==" exact, ">=" inclusion
    tokens: Multiset

    def holds(self, m):
        have = m[self.place]
        return have == self.tokens if self.op == "==" else ms_leq(self.tokens, have)

    def __str__(self):
        return f'mark("{self.place}") {self.op} {format_multiset(self.tokens)}'


_RELOPS = {
    "=": lambda a, b: a == b, "==": lambda a, b: a == b, "<>": lambda a, b: a != b,
    "<": lambda a, b: a < b, "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b, ">=": lambda a, b: a >= b,
}


@dataclass(frozen=True)
class SizeCompare(Predicate):
    place: str
    op: str
    bound: int

    def holds(self, m):
        return _RELOPS[self.op](m[self.place].size(), self.bound)

    def __str__(self):
        return f'size(mark("{self.place}")) {self.op} {self.bound}'


@dataclass(frozen=True)
class PConst(Predicate):
    value: bool

    def holds(self, m):
        return self.value

    def __str__(self):
        return "true" if self.value else "false"


@dataclass(frozen=True)
class PNot(Predicate):
    operand: Predicate

    def holds(self, m):
        return not self.operand.holds(m)

    def __str__(self):
        return f"not ({self.operand})"


@dataclass(frozen=True)
class PAnd(Predicate):
    left: Predicate
    right: Predicate

    def holds(self, m):
        return self.left.holds(m) and self.right.holds(m)

    def __str__(self):
        return f"({self.left} andalso {self.right})"


@dataclass(frozen=True)
class POr(Predicate):
    left: Predicate
    right: Predicate

    def holds(self, m):
        return self.left.holds(m) or self.right.holds(m)

    def __str__(self):
        return f"({self.left} orelse {self.right})"


# ---------------------------------------------------------------------------
# Formulas


class Formula:
    pass


@dataclass(frozen=True)
class TT(Formula):
    def __str__(self):
        return "TT"


@dataclass(frozen=True)
class FF(Formula):
    def __str__(self):
        return "FF"


@dataclass(frozen=True)
class NF(Formula):
    label: str
    pred: Predicate

    def __str__(self):
        return f'NF("{self.label}", {self.pred})'


@dataclass(frozen=True)
class Not(Formula):
    f: Formula

    def __str__(self):
        return f"NOT({self.f})"


@dataclass(frozen=True)
class And(Formula):
    f: Formula
    g: Formula

    def __str__(self):
        return f"AND({self.f}, {self.g})"


@dataclass(frozen=True)
class Or(Formula):
    f: Formula
    g: Formula

    def __str__(self):
        return f"OR({self.f}, {self.g})"


@dataclass(frozen=True)
class ExistUntil(Formula):
    f: Formula
    g: Formula

    def __str__(self):
        return f"EXIST_UNTIL({self.f}, {self.g})"


@dataclass(frozen=True)
class ForallUntil(Formula):
    f: Formula
    g: Formula

    def __str__(self):
        return f"FORALL_UNTIL({self.f}, {self.g})"


@dataclass(frozen=True)
class Pos(Formula):
    f: Formula

    def __str__(self):
        return f"POS({self.f})"


@dataclass(frozen=True)
class Ev(Formula):
    f: Formula

    def __str__(self):
        return f"EV({self.f})"


@dataclass(frozen=True)
class Inv(Formula):
    f: Formula

    def __str__(self):
        return f"INV({self.f})"


@dataclass(frozen=True)
class Along(Formula):
    f: Formula

    def __str__(self):
        return f"ALONG({self.f})"


def expand(f: Formula) -> Formula:
    """Rewrite one derived operator into the core fragment."""
    if isinstance(f, Pos):
        return ExistUntil(TT(), f.f)
    if isinstance(f, Ev):
        return ForallUntil(TT(), f.f)
    if isinstance(f, Inv):
        return Not(ExistUntil(TT(), Not(f.f)))
    if isinstance(f, Along):
        return Not(ForallUntil(TT(), Not(f.f)))
    return f


def nf_atoms(f: Formula) -> List[NF]:
    out: List[NF] = []

    def walk(x):
        if isinstance(x, NF):
            if x not in out:
                out.append(x)
        elif isinstance(x, (Not, Pos, Ev, Inv, Along)):
            walk(x.f)
        elif isinstance(x, (And, Or, ExistUntil, ForallUntil)):
            walk(x.f)
            walk(x.g)

    walk(f)
    return out


# ---------------------------------------------------------------------------
# Evaluation


class _Structure:
    """Successor/predecessor sets of a graph, without duplicate edges."""

    def __init__(self, g):
        if getattr(g, "exhausted", False):
            raise IncompleteGraphError(
                "model checking needs the complete state space, but exploration stopped at "
                f"{g.max_nodes} nodes (raise --max-nodes)")
        self.g = g
        self.n = len(g.nodes)
        self.succ = [sorted(set(g.successors(i))) for i in range(self.n)]
        self.pred: List[List[int]] = [[] for _ in range(self.n)]
        for i, ss in enumerate(self.succ):
            for j in ss:
                self.pred[j].append(i)


class Evaluator:
    """Memoizing evaluator of formulas over one graph.

    Works on any object with a ``nodes`` list (whatever NF predicates
    accept) and a ``successors(i)`` method.
    """

    def __init__(self, g):
        self.s = _Structure(g)
        self.g = g
        self.cache: Dict[Formula, FrozenSet[int]] = {}

    def sat(self, f: Formula) -> FrozenSet[int]:
        hit = self.cache.get(f)
        if hit is not None:
            return hit
        res = self._sat(f)
        self.cache[f] = res
        return res

    def _sat(self, f: Formula) -> FrozenSet[int]:
        every = range(self.s.n)
        if isinstance(f, TT):
            return frozenset(every)
        if isinstance(f, FF):
            return frozenset()
        if isinstance(f, NF):
            return frozenset(i for i in every if f.pred.holds(self.g.nodes[i]))
        if isinstance(f, Not):
            return frozenset(every) - self.sat(f.f)
        if isinstance(f, And):
            return self.sat(f.f) & self.sat(f.g)
        if isinstance(f, Or):
            return self.sat(f.f) | self.sat(f.g)
        if isinstance(f, ExistUntil):
            return self._eu(self.sat(f.f), self.sat(f.g))
        if isinstance(f, ForallUntil):
            return self._au(self.sat(f.f), self.sat(f.g))
        return self.sat(expand(f))

    def _eu(self, a: FrozenSet[int], b: FrozenSet[int]) -> FrozenSet[int]:
        result: Set[int] = set(b)
        work = deque(sorted(b))
        while work:
            j = work.popleft()
            for i in self.s.pred[j]:
                if i not in result and i in a:
                    result.add(i)
                    work.append(i)
        return frozenset(result)

    def _au(self, a: FrozenSet[int], b: FrozenSet[int]) -> FrozenSet[int]:
        # A node joins once it satisfies a, has successors, and all of them
        # are already in the set. Deadlocks outside b never join.
        result: Set[int] = set(b)
        pending = [len(ss) for ss in self.s.succ]
        work = deque(sorted(b))
        while work:
            j = work.popleft()
            for i in self.s.pred[j]:
                if i in result:
                    continue
                pending[i] -= 1
                if pending[i] == 0 and i in a:
                    result.add(i)
                    work.append(i)
        return frozenset(result)

    # -- paths ---------------------------------------------------------------

    def shortest_path(self, start: int, through: FrozenSet[int], goal: FrozenSet[int]) -> Optional[List[int]]:
        """Shortest path from ``start`` to a goal node whose earlier nodes all
        lie in ``through``; ties broken by smallest node id."""
        if start in goal:
            return [start]
        if start not in through:
            return None
        parent = {start: None}
        work = deque([start])
        while work:
            i = work.popleft()
            for j in self.s.succ[i]:
                if j in parent:
                    continue
                parent[j] = i
                if j in goal:
                    path = [j]
                    while parent[path[-1]] is not None:
                        path.append(parent[path[-1]])
                    return path[::-1]
                if j in through:
                    work.append(j)
        return None

    def witness(self, f: Formula, node: int) -> Optional[List[int]]:
        """Shortest path justifying an existential until (or POS) at ``node``,
        continued through a nested existential in its target when there
        is one."""
        if isinstance(f, Pos):
            f = ExistUntil(TT(), f.f)
        if isinstance(f, ExistUntil):
            if node not in self.sat(f):
                return None
            path = self.shortest_path(node, self.sat(f.f), self.sat(f.g))
            more = self.witness(f.g, path[-1])
            return path + more[1:] if more else path
        if isinstance(f, And):
            for part in (f.f, f.g):
                found = self.witness(part, node)
                if found and len(found) > 1:
                    return found
        return None

    def counterexample(self, f: Formula, node: int) -> Optional[List[int]]:
        """For INV(f) false at ``node``: shortest path to a node violating f."""
        if not isinstance(f, Inv):
            return None
        bad = frozenset(range(self.s.n)) - self.sat(f.f)
        return self.shortest_path(node, frozenset(range(self.s.n)), bad)


def eval_states(g, f: Formula) -> FrozenSet[int]:
    return Evaluator(g).sat(f)


@dataclass
class CheckResult:
    name: str
    formula: Formula
    verdict: bool
    node: int
    path: List[int] = field(default_factory=list)
    path_kind: str = ""  # "witness", "counterexample" or ""
    labels: List[str] = field(default_factory=list)


def check_at(g, f: Formula, node: int, name: str = "", evaluator: Evaluator | None = None) -> CheckResult:
    ev = evaluator or Evaluator(g)
    if not 0 <= node < ev.s.n:
        raise ValueError(f"node {node} does not exist (graph has {ev.s.n} nodes)")
    verdict = node in ev.sat(f)
    path: List[int] = []
    kind = ""
    if verdict:
        w = ev.witness(f, node)
        if w is not None:
            path, kind = w, "witness"
    else:
        c = ev.counterexample(f, node)
        if c is not None:
            path, kind = c, "counterexample"
    labels: List[str] = []
    for atom in nf_atoms(f):
        label = atom.label or UNNAMED
        if label not in labels and any(n in ev.sat(atom) for n in path):
            labels.append(label)
    return CheckResult(name, f, verdict, node, path, kind, labels)


def validate_witness(g, f: Formula, path: Sequence[int]) -> bool:
    """Re-check a witness path node by node: consecutive nodes are joined
    by an edge and the until structure holds along it."""
    ev = Evaluator(g)
    if not path:
        return False
    for a, b in zip(path, path[1:]):
        if b not in ev.s.succ[a]:
            return False

    def holds(f, path) -> bool:
        if isinstance(f, Pos):
            f = ExistUntil(TT(), f.f)
        if isinstance(f, ExistUntil):
            for k, n in enumerate(path):
                if holds_at(f.g, path[k:]):
                    return True
                if n not in ev.sat(f.f):
                    return False
            return False
        return path[0] in ev.sat(f)

    def holds_at(f, rest) -> bool:
        if isinstance(f, (Pos, ExistUntil)):
            return holds(f, rest)
        if isinstance(f, And):
            return holds_at(f.f, rest) and holds_at(f.g, rest)
        return rest[0] in ev.sat(f)

    return holds(f, list(path))


# ---------------------------------------------------------------------------
# Property scripts

_UNARY = {"NOT": Not, "POS": Pos, "EV": Ev, "INV": Inv, "ALONG": Along}
_BINARY = {"AND": And, "OR": Or, "EXIST_UNTIL": ExistUntil, "FORALL_UNTIL": ForallUntil}


@dataclass
class PropScript:
    props: Dict[str, Formula]
    evals: List[Tuple[str, object]]  # (prop name, "init" or node id)
    preds: Dict[str, Predicate] = field(default_factory=dict)


class _PropParser:
    def __init__(self, text: str, net: FlatNet):
        self.ts = TokenStream(tokenize(text))
        self.net = net
        self.env = Env(dict(net.colorsets), {})
        self.preds: Dict[str, Predicate] = {}
        self.props: Dict[str, Formula] = {}
        self.evals: List[Tuple[str, object]] = []

    def error(self, msg, tok: Token, code="syntax"):
        return PropError(msg, tok.line, tok.col, code=code)

    def script(self) -> PropScript:
        ts = self.ts
        while ts.peek().kind != "EOF":
            kw = ts.expect_name("'prop', 'pred' or 'eval'")
            if kw.text in ("prop", "pred"):
                name = ts.expect_name(f"{kw.text} name")
                if name.text in self.props or name.text in self.preds:
                    raise self.error(f"{name.text!r} is already defined", name, "duplicate")
                ts.expect(":=")
                if kw.text == "prop":
                    self.props[name.text] = self.formula()
                else:
                    self.preds[name.text] = self.predicate()
                ts.expect(";")
            elif kw.text == "eval":
                name = ts.expect_name("prop name")
                if name.text not in self.props:
                    raise self.error(f"undefined prop {name.text!r}", name, "unknown")
                ts.expect("at")
                tok = ts.next()
                if tok.kind == "NAME" and tok.text == "init":
                    where: object = "init"
                elif tok.kind == "INT":
                    where = tok.value
                else:
                    raise self.error("expected 'init' or a node id", tok)
                ts.expect(";")
                self.evals.append((name.text, where))
            else:
                raise self.error(f"unknown statement {kw.text!r}", kw)
        return PropScript(self.props, self.evals, self.preds)

    # formulas

    def formula(self) -> Formula:
        ts = self.ts
        tok = ts.expect_name("formula")
        word = tok.text
        if word == "TT":
            return TT()
        if word == "FF":
            return FF()
        if word == "NF":
            ts.expect("(")
            label = ""
            if ts.peek().kind == "STRING" and ts.peek(1).kind == "SYM" and ts.peek(1).text == ",":
                label = ts.next().value
                ts.expect(",")
            pred = self.predicate()
            ts.expect(")")
            return NF(label, pred)
        if word in _UNARY:
            ts.expect("(")
            f = self.formula()
            ts.expect(")")
            return _UNARY[word](f)
        if word in _BINARY:
            ts.expect("(")
            f = self.formula()
            ts.expect(",")
            g = self.formula()
            ts.expect(")")
            return _BINARY[word](f, g)
        if word in self.props:
            return self.props[word]
        raise self.error(f"undefined prop {word!r}", tok, "unknown")

    # predicates

    def predicate(self) -> Predicate:
        left = self.conj()
        while self.ts.accept("orelse"):
            left = POr(left, self.conj())
        return left

    def conj(self) -> Predicate:
        left = self.unary()
        while self.ts.accept("andalso"):
            left = PAnd(left, self.unary())
        return left

    def unary(self) -> Predicate:
        ts = self.ts
        if ts.accept("not"):
            return PNot(self.unary())
        if ts.accept("("):
            p = self.predicate()
            ts.expect(")")
            return p
        tok = ts.expect_name("predicate")
        if tok.text in ("true", "false"):
            return PConst(tok.text == "true")
        if tok.text == "mark":
            place = self.place_ref()
            op = ts.next()
            if op.text in ("=", "=="):
                kind = "=="
            elif op.text == ">=":
                kind = ">="
            else:
                raise self.error("expected '==' or '>=' after mark(...)", op)
            return MarkCompare(place, kind, self.ms_literal(place))
        if tok.text == "size":
            ts.expect("(")
            mk = ts.expect_name("'mark'")
            if mk.text != "mark":
                raise self.error("size() takes mark(...)", mk)
            place = self.place_ref()
            ts.expect(")")
            op = ts.next()
            if op.text not in _RELOPS:
                raise self.error("expected a comparison after size(...)", op)
            sign = -1 if ts.accept("-") else 1
            num = ts.next()
            if num.kind != "INT":
                raise self.error("expected an integer", num)
            return SizeCompare(place, op.text, sign * num.value)
        if tok.text in self.preds:
            return self.preds[tok.text]
        raise self.error(f"unknown predicate {tok.text!r}", tok, "unknown")

    def place_ref(self) -> str:
        ts = self.ts
        ts.expect("(")
        tok = ts.peek()
        if tok.kind == "STRING":
            ref = ts.next().value
        else:
            parts = [ts.expect_name("place name").text]
            while ts.accept("."):
                parts.append(ts.expect_name("place name").text)
            ref = ".".join(parts)
        ts.expect(")")
        try:
            return self.net.resolve_place(ref)
        except KeyError as e:
            raise self.error(e.args[0], tok, "unknown place") from None

    def ms_literal(self, place: str) -> Multiset:
        ts = self.ts
        toks: List[Token] = []
        depth = 0
        while True:
            tok = ts.peek()
            if tok.kind == "EOF":
                break
            if depth == 0 and (tok.text in (")", ",", ";") and tok.kind == "SYM"
                               or tok.kind == "NAME" and tok.text in ("andalso", "orelse")):
                break
            if tok.kind == "SYM" and tok.text == "(":
                depth += 1
            elif tok.kind == "SYM" and tok.text == ")":
                depth -= 1
            toks.append(ts.next())
        if not toks:
            raise self.error("expected a multiset", ts.peek())
        if len(toks) == 1 and toks[0].kind == "NAME" and toks[0].text == "empty":
            return Multiset()
        cs = self.net.places[place].colorset
        e = parse_tokens(toks, self.env, cs)
        if free_vars(e):
            raise self.error("multiset literals must not use variables", toks[0], "type")
        return eval_multiset(e, {})


def parse_props(text: str, net: FlatNet) -> PropScript:
    """Parse a property script against ``net`` (place names are resolved
    to flat places, by suffix when unambiguous)."""
    try:
        return _PropParser(text, net).script()
    except PropError:
        raise
    except SourceError as e:
        raise PropError(e.message, e.line, e.col, code=e.code) from None


def run_script(g, script: PropScript) -> List[CheckResult]:
    ev = Evaluator(g)
    out = []
    for name, where in script.evals:
        node = g.initial if where == "init" else where
        out.append(check_at(g, script.props[name], node, name, ev))
    return out
