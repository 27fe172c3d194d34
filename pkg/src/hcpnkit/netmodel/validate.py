"""Well-formedness rules for parsed models."""
from __future__ import annotations

from typing import Dict, List, Set

from ..exprlang import free_vars, format_expr, is_pattern
from .model import Diagnostic, ModelDef, PageDef


def validate_model(m: ModelDef) -> List[Diagnostic]:
    """All well-formedness problems of ``m``; an empty list means the model
    can be flattened."""
    diags: List[Diagnostic] = []
    if m.main is None or m.main not in m.pages:
        diags.append(Diagnostic("main", f"main page {m.main!r} is not defined"))
    for page in m.pages.values():
        _check_page(m, page, diags)
    diags.extend(_cycles(m))
    return diags


def _check_page(m: ModelDef, page: PageDef, diags: List[Diagnostic]) -> None:
    for place in page.places.values():
        if place.init is not None and free_vars(place.init):
            names = ", ".join(sorted(free_vars(place.init)))
            diags.append(Diagnostic("init", f"initial marking of {page.name}.{place.name} "
                                    f"uses variables ({names})", place.line, place.col))
        if place.init is not None and place.is_port:
            diags.append(Diagnostic("port-init", f"port {page.name}.{place.name} must not have an "
                                    "initial marking; initialize the socket instead",
                                    place.line, place.col))

    inputs: Dict[str, Set[str]] = {t: set() for t in page.transitions}
    needed: Dict[str, Set[str]] = {
        t: set(free_vars(td.guard)) if td.guard is not None else set()
        for t, td in page.transitions.items()}
    for arc in page.arcs:
        if arc.direction == "in":
            if not is_pattern(arc.expr):
                diags.append(Diagnostic(
                    "pattern", f"input arc {arc.source} -> {arc.target} on page {page.name} must be a "
                    f"pattern, got {format_expr(arc.expr)}", arc.line, arc.col))
            inputs[arc.transition] |= free_vars(arc.expr)
        else:
            needed[arc.transition] |= free_vars(arc.expr)
    for t, need in needed.items():
        missing = need - inputs[t]
        if missing:
            td = page.transitions[t]
            diags.append(Diagnostic(
                "uncovered variable",
                f"transition {page.name}.{t}: uncovered variable(s) {', '.join(sorted(missing))} "
                "do not occur in any input pattern", td.line, td.col))

    for sub in page.substitutions.values():
        target = m.pages.get(sub.subpage)
        if target is None:
            diags.append(Diagnostic("unknown", f"substitution {page.name}.{sub.name} uses unknown "
                                    f"page {sub.subpage!r}", sub.line, sub.col))
            continue
        bound: Dict[str, int] = {}
        for socket, port in sub.socket_map:
            sp = page.places.get(socket)
            pp = target.places.get(port)
            if sp is None:
                diags.append(Diagnostic("unknown", f"substitution {page.name}.{sub.name}: "
                                        f"unknown socket place {socket!r}", sub.line, sub.col))
            if pp is None or not pp.is_port:
                what = "unknown port" if pp is None else "not a port"
                diags.append(Diagnostic("unknown", f"substitution {page.name}.{sub.name}: "
                                        f"{sub.subpage}.{port} is {what}", sub.line, sub.col))
                continue
            bound[port] = bound.get(port, 0) + 1
            if sp is not None and sp.colorset != pp.colorset:
                diags.append(Diagnostic(
                    "colorset mismatch", f"substitution {page.name}.{sub.name}: socket {socket} has "
                    f"color set {sp.colorset.name} but port {sub.subpage}.{port} has "
                    f"{pp.colorset.name}", sub.line, sub.col))
        for port in target.ports():
            n = bound.get(port.name, 0)
            if n == 0:
                diags.append(Diagnostic("unbound port", f"substitution {page.name}.{sub.name}: "
                                        f"port {sub.subpage}.{port.name} is not bound",
                                        sub.line, sub.col))
            elif n > 1:
                diags.append(Diagnostic("duplicate", f"substitution {page.name}.{sub.name}: "
                                        f"port {sub.subpage}.{port.name} is bound {n} times",
                                        sub.line, sub.col))

    for arc in page.arcs:
        place = page.places[arc.place]
        if place.port == "in" and arc.direction == "out":
            diags.append(Diagnostic("port direction", f"in-port {page.name}.{place.name} is the "
                                    f"target of output arc from {arc.transition}", arc.line, arc.col))
        elif place.port == "out" and arc.direction == "in":
            diags.append(Diagnostic("port direction", f"out-port {page.name}.{place.name} is the "
                                    f"source of input arc to {arc.transition}", arc.line, arc.col))


def _cycles(m: ModelDef) -> List[Diagnostic]:
    diags = []
    state: Dict[str, int] = {}  # 1 = on stack, 2 = done

    def visit(name: str, stack: List[str]):
        state[name] = 1
        stack.append(name)
        page = m.pages[name]
        for sub in page.substitutions.values():
            nxt = sub.subpage
            if nxt not in m.pages:
                continue
            if state.get(nxt) == 1:
                cycle = stack[stack.index(nxt):] + [nxt]
                diags.append(Diagnostic("cycle", "cyclic page references: " + " -> ".join(cycle),
                                        sub.line, sub.col))
            elif nxt not in state:
                visit(nxt, stack)
        stack.pop()
        state[name] = 2

    for name in sorted(m.pages):
        if name not in state:
            visit(name, [])
    return diags
