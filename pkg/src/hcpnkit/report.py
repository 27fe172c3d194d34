"""Text, JSON and DOT renderings of analysis and check results."""
from __future__ import annotations

import json
from typing import List

from .checker import CheckResult
from .engine import dump_marking
from .kernel import format_multiset, format_value
from .statespace import AnalysisReport, OccurrenceGraph


def report_dict(r: AnalysisReport) -> dict:
    """The report as a plain dict with a fixed key order."""
    out = {
        "nodes": r.nodes,
        "edges": r.edges,
        "exhausted": r.exhausted,
        "initial": r.initial,
        "deadMarkings": r.dead_markings,
        "deadTransitions": r.dead_transitions,
        "liveTransitions": r.live_transitions,
        "bounds": None,
        "pageBounds": None,
    }
    if r.bounds is not None:
        out["bounds"] = {
            p: {"integer": b.integer,
                "multiset": [{"value": format_value(v), "count": n} for v, n in b.multiset.items()]}
            for p, b in sorted(r.bounds.items())}
        out["pageBounds"] = dict(sorted(r.page_bounds.items()))
    return out


def to_json(doc) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def _names(xs: List[str]) -> str:
    return ", ".join(xs) if xs else "none"


def render_report(r: AnalysisReport, fmt: str = "text") -> str:
    if fmt == "json":
        return to_json(report_dict(r))
    lines = [f"nodes: {r.nodes}, edges: {r.edges}, dead markings: "
             + (_names([str(n) for n in r.dead_markings]) if r.dead_markings is not None else "unknown")]
    lines.append(f"initial node: {r.initial}")
    if r.exhausted:
        lines.append("state space budget exhausted: analyses need the complete graph")
        return "\n".join(lines) + "\n"
    lines.append(f"dead transitions ({len(r.dead_transitions)}): {_names(r.dead_transitions)}")
    lines.append(f"live transitions ({len(r.live_transitions)}): {_names(r.live_transitions)}")
    lines.append("bounds (integer | multiset):")
    width = max((len(p) for p in r.bounds), default=0)
    for p, b in sorted(r.bounds.items()):
        lines.append(f"  {p.ljust(width)}  {b.integer} | {format_multiset(b.multiset)}")
    lines.append("page instance bounds (most tokens held at once):")
    for inst, n in sorted(r.page_bounds.items()):
        lines.append(f"  {inst}: {n}")
    return "\n".join(lines) + "\n"


def check_dict(results: List[CheckResult]) -> dict:
    return {
        "allTrue": all(r.verdict for r in results),
        "properties": [
            {"name": r.name, "formula": str(r.formula), "verdict": r.verdict, "node": r.node,
             "pathKind": r.path_kind or None, "path": r.path, "labels": r.labels}
            for r in results],
    }


def render_checks(results: List[CheckResult], fmt: str = "text") -> str:
    if fmt == "json":
        return to_json(check_dict(results))
    lines = []
    for r in results:
        lines.append(f"{r.name} at node {r.node}: {'true' if r.verdict else 'false'}")
        if r.path:
            lines.append(f"  {r.path_kind}: {' -> '.join(str(n) for n in r.path)}")
        if r.labels:
            lines.append(f"  along it: {'; '.join(r.labels)}")
    return "\n".join(lines) + "\n"


def _dot_escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")


def to_dot(g: OccurrenceGraph, markings: bool = False) -> str:
    """DOT graph of the occurrence graph; node labels optionally carry the
    full marking."""
    lines = ["digraph occurrence_graph {", "  node [shape=box, fontname=monospace];"]
    for i, m in enumerate(g.nodes):
        label = str(i) + ("\n" + dump_marking(m) if markings else "")
        extra = ", penwidth=2" if i == g.initial else ""
        lines.append(f'  n{i} [label="{_dot_escape(label)}"{extra}];')
    for s, be, d in g.edges:
        binding = ",".join(f"{k}={format_value(v)}" for k, v in be.binding)
        lines.append(f'  n{s} -> n{d} [label="{_dot_escape(be.transition + "{" + binding + "}")}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
