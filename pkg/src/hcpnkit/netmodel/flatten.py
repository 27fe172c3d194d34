"""Flattening: replace every substitution transition by a fresh copy of
its subpage, fusing each port with the socket it is bound to."""
from __future__ import annotations

from typing import Dict, List, Tuple

from ..exprlang import eval_multiset, free_vars
from ..kernel import Marking, Multiset
from .model import (Diagnostic, FlatArc, FlatNet, FlatPlace, FlatTransition, ModelDef,
                    ModelError)
from .validate import validate_model


def flatten(m: ModelDef, check: bool = True) -> FlatNet:
    """Instantiate the page hierarchy below ``m.main``.

    Flat names are ``Main.Subst.Local``. A port becomes an alias of its
    socket's flat place, so the fused place keeps the socket's name and
    initial marking.
    """
    if check:
        diags = [d for d in validate_model(m) if d.severity == "error"]
        if diags:
            raise ModelError(diags)
    places: Dict[str, FlatPlace] = {}
    transitions: Dict[str, FlatTransition] = {}
    arcs: List[FlatArc] = []
    initial: Dict[str, Multiset] = {}
    instances: Dict[str, str] = {}
    port_links: Dict[Tuple[str, str], str] = {}

    def instantiate(page_name: str, instance: str, aliases: Dict[str, str]):
        page = m.pages[page_name]
        instances[instance] = page_name
        local: Dict[str, str] = {}
        for pd in page.places.values():
            if pd.name in aliases:
                if pd.init is not None and eval_multiset(pd.init, {}):
                    raise ModelError([Diagnostic(
                        "fusion conflict", f"port {page_name}.{pd.name} in instance {instance} "
                        "declares an initial marking", pd.line, pd.col)])
                local[pd.name] = aliases[pd.name]
                port_links[(instance, pd.name)] = aliases[pd.name]
                continue
            flat = f"{instance}.{pd.name}"
            local[pd.name] = flat
            places[flat] = FlatPlace(flat, pd.colorset, instance, (page_name, pd.name))
            ms = eval_multiset(pd.init, {}, pd.colorset.name) if pd.init is not None else Multiset((), pd.colorset.name)
            initial[flat] = ms
        ins: Dict[str, list] = {t: [] for t in page.transitions}
        outs: Dict[str, list] = {t: [] for t in page.transitions}
        for arc in page.arcs:
            flat_t = f"{instance}.{arc.transition}"
            flat_p = local[arc.place]
            (ins if arc.direction == "in" else outs)[arc.transition].append((flat_p, arc.expr))
            arcs.append(FlatArc(flat_p, flat_t, arc.direction, arc.expr, (page_name, arc.id)))
        for td in page.transitions.values():
            flat = f"{instance}.{td.name}"
            variables = set(free_vars(td.guard)) if td.guard is not None else set()
            for _, e in ins[td.name] + outs[td.name]:
                variables |= free_vars(e)
            transitions[flat] = FlatTransition(flat, td.guard, instance, (page_name, td.name),
                                               tuple(ins[td.name]), tuple(outs[td.name]),
                                               frozenset(variables))
        for sub in page.substitutions.values():
            child_aliases = {port: local[socket] for socket, port in sub.socket_map}
            instantiate(sub.subpage, f"{instance}.{sub.name}", child_aliases)

    instantiate(m.main, m.main, {})
    marking = Marking(initial, places.keys())
    return FlatNet(places, transitions, arcs, marking, instances, port_links,
                   dict(m.colorsets), dict(m.variables))
