"""The token game: enabling, firing, random runs and stepping sessions."""
from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Tuple

from .exprlang import binding_key, eval_expr, eval_multiset, format_expr, match_arc_pattern
from .kernel import Marking, Multiset, canonical_key, format_multiset, format_value, ms_diff, ms_union
from .netmodel.model import FlatNet, FlatTransition


class FiringError(Exception):
    """Attempt to fire a binding element that is not enabled."""


class SessionError(Exception):
    pass


@dataclass(frozen=True)
class BindingElement:
    transition: str
    binding: Tuple[Tuple[str, object], ...]  # sorted by variable name

    @classmethod
    def make(cls, transition: str, binding: Mapping[str, object]) -> "BindingElement":
        return cls(transition, tuple(sorted(binding.items())))

    @property
    def env(self) -> Dict[str, object]:
        return dict(self.binding)

    def sort_key(self):
        return (self.transition, binding_key(self.env))

    def __str__(self):
        inner = ",".join(f"{k}={format_value(v)}" for k, v in self.binding)
        return f"{self.transition} {{{inner}}}"


def _bindings(t: FlatTransition, m: Marking):
    """Bindings of ``t`` under which all input patterns are jointly present.

    Arcs are matched in declaration order; each arc sees the tokens left
    over by the arcs before it on the same place.
    """
    results = []

    def search(i: int, binding: dict, residual: Dict[str, Multiset]):
        if i == len(t.inputs):
            if t.guard is None or eval_expr(t.guard, binding) is True:
                results.append(binding)
            return
        place, pattern = t.inputs[i]
        avail = residual.get(place)
        if avail is None:
            avail = m[place]
        for b, consumed in match_arc_pattern(pattern, avail, binding):
            nxt = dict(residual)
            nxt[place] = ms_diff(avail, consumed)
            search(i + 1, b, nxt)

    search(0, {}, {})
    return results


def enabled(net: FlatNet, m: Marking) -> List[BindingElement]:
    """All enabled binding elements, ordered by transition then binding."""
    out = []
    for name in net.transition_order():
        seen = set()
        for b in _bindings(net.transitions[name], m):
            be = BindingElement.make(name, b)
            if be not in seen:
                seen.add(be)
                out.append(be)
    out.sort(key=BindingElement.sort_key)
    return out


def is_enabled(net: FlatNet, m: Marking, be: BindingElement) -> bool:
    t = net.transitions.get(be.transition)
    if t is None:
        return False
    env = be.env
    if set(env) != set(t.variables):
        return False
    return be.binding in {tuple(sorted(b.items())) for b in _bindings(t, m)}


def delta(net: FlatNet, be: BindingElement) -> Tuple[Dict[str, Multiset], Dict[str, Multiset]]:
    """(consumed, produced) multisets per place for one binding element."""
    t = net.transitions[be.transition]
    env = be.env
    consumed: Dict[str, Multiset] = {}
    produced: Dict[str, Multiset] = {}
    for place, e in t.inputs:
        consumed[place] = ms_union(consumed.get(place, Multiset()), eval_multiset(e, env))
    for place, e in t.outputs:
        produced[place] = ms_union(produced.get(place, Multiset()), eval_multiset(e, env))
    return consumed, produced


def fire(net: FlatNet, m: Marking, be: BindingElement) -> Marking:
    if not is_enabled(net, m, be):
        raise FiringError(f"{be} is not enabled")
    return _apply(net, m, be)


def _apply(net: FlatNet, m: Marking, be: BindingElement) -> Marking:
    consumed, produced = delta(net, be)
    changes = {}
    for place in set(consumed) | set(produced):
        ms = m[place]
        if place in consumed:
            ms = ms_diff(ms, consumed[place])  # underflow here would be a bug, not a user error
        if place in produced:
            ms = ms_union(ms, produced[place])
        changes[place] = ms
    return m.replace(changes)


def successors(net: FlatNet, m: Marking) -> List[Tuple[BindingElement, Marking]]:
    """Enabled elements with their target markings (no re-check needed)."""
    return [(be, _apply(net, m, be)) for be in enabled(net, m)]


def digest(m: Marking) -> str:
    return hashlib.sha256(canonical_key(m)).hexdigest()[:16]


def dump_marking(m: Marking) -> str:
    lines = [f"{p}: {format_multiset(ms)}" for p, ms in m.marked()]
    return "\n".join(lines) if lines else "(empty marking)"


@dataclass
class Trace:
    initial: Marking
    steps: List[Tuple[BindingElement, Marking]] = field(default_factory=list)
    seed: int = 0
    max_steps: int = 0

    def __len__(self):
        return len(self.steps)

    @property
    def final(self) -> Marking:
        return self.steps[-1][1] if self.steps else self.initial

    def lines(self) -> List[str]:
        return [f"{i} {be} -> {digest(after)}" for i, (be, after) in enumerate(self.steps, 1)]

    def serialize(self) -> str:
        head = f"seed {self.seed} max_steps {self.max_steps} initial {digest(self.initial)}"
        return "\n".join([head] + self.lines()) + "\n"


def run_random(net: FlatNet, seed: int, max_steps: int) -> Trace:
    """Fire uniformly chosen binding elements until a dead marking or the
    step budget is reached."""
    rng = random.Random(seed)
    trace = Trace(net.initial, [], seed, max_steps)
    m = net.initial
    for _ in range(max_steps):
        options = successors(net, m)
        if not options:
            break
        be, m = options[rng.randrange(len(options))]
        trace.steps.append((be, m))
    return trace


class Session:
    """Interactive token game with exact undo."""

    def __init__(self, net: FlatNet, marking: Marking | None = None):
        self.net = net
        self.initial = marking if marking is not None else net.initial
        self.current = self.initial
        self.history: List[Tuple[BindingElement, Marking]] = []  # (fired, marking before)

    def list(self) -> List[BindingElement]:
        return enabled(self.net, self.current)

    def step(self, choice: int) -> Marking:
        options = self.list()
        if not 0 <= choice < len(options):
            raise SessionError(f"choice {choice} out of range (0..{len(options) - 1})"
                               if options else "no enabled binding elements")
        be = options[choice]
        after = fire(self.net, self.current, be)
        self.history.append((be, self.current))
        self.current = after
        return after

    def undo(self) -> Marking:
        if not self.history:
            raise SessionError("nothing to undo")
        be, _before = self.history.pop()
        consumed, produced = delta(self.net, be)
        changes = {}
        for place in set(consumed) | set(produced):
            ms = self.current[place]
            if place in produced:
                ms = ms_diff(ms, produced[place])
            if place in consumed:
                ms = ms_union(ms, consumed[place])
            changes[place] = ms
        self.current = self.current.replace(changes)
        return self.current

    @property
    def fired(self) -> List[BindingElement]:
        return [be for be, _ in self.history]


def describe(net: FlatNet, be: BindingElement) -> str:
    t = net.transitions[be.transition]
    guard = f" [{format_expr(t.guard)}]" if t.guard is not None else ""
    return f"{be}{guard}"
