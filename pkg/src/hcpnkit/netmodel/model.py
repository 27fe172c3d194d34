"""Hierarchical and flat net representations."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from ..exprlang import Env, Expr
from ..kernel import ColorSet, Marking

PORT_KINDS = ("none", "in", "out", "inout")


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    line: int = 0
    col: int = 0
    severity: str = "error"

    def __str__(self):
        where = f"{self.line}:{self.col}: " if self.line else ""
        return f"{where}{self.severity}: {self.message} [{self.code}]"


class ModelError(Exception):
    """A model failed to parse, validate or flatten."""

    def __init__(self, diagnostics: List[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


@dataclass(frozen=True)
class PlaceDef:
    name: str
    colorset: ColorSet
    init: Optional[Expr] = None
    port: str = "none"
    line: int = 0
    col: int = 0

    @property
    def is_port(self) -> bool:
        return self.port != "none"


@dataclass(frozen=True)
class TransitionDef:
    name: str
    guard: Optional[Expr] = None
    line: int = 0
    col: int = 0


@dataclass(frozen=True)
class ArcDef:
    id: str
    source: str
    target: str
    expr: Expr
    direction: str  # "in": place -> transition, "out": transition -> place
    line: int = 0
    col: int = 0

    @property
    def place(self) -> str:
        return self.source if self.direction == "in" else self.target

    @property
    def transition(self) -> str:
        return self.target if self.direction == "in" else self.source


@dataclass(frozen=True)
class SubstitutionDef:
    name: str
    subpage: str
    socket_map: Tuple[Tuple[str, str], ...]  # (socket on this page, port on subpage)
    line: int = 0
    col: int = 0


@dataclass
class PageDef:
    name: str
    places: Dict[str, PlaceDef] = field(default_factory=dict)
    transitions: Dict[str, TransitionDef] = field(default_factory=dict)
    arcs: List[ArcDef] = field(default_factory=list)
    substitutions: Dict[str, SubstitutionDef] = field(default_factory=dict)
    line: int = 0
    col: int = 0

    def ports(self) -> List[PlaceDef]:
        return [p for p in self.places.values() if p.is_port]


@dataclass
class ModelDef:
    colorsets: Dict[str, ColorSet]
    variables: Dict[str, ColorSet]
    pages: Dict[str, PageDef]
    main: Optional[str]

    @property
    def env(self) -> Env:
        return Env(dict(self.colorsets), dict(self.variables))


@dataclass(frozen=True)
class FlatPlace:
    name: str
    colorset: ColorSet
    instance: str
    source: Tuple[str, str]  # (page, local place name)


@dataclass(frozen=True)
class FlatTransition:
    name: str
    guard: Optional[Expr]
    instance: str
    source: Tuple[str, str]
    inputs: Tuple[Tuple[str, Expr], ...]  # (flat place, pattern), in arc order
    outputs: Tuple[Tuple[str, Expr], ...]
    variables: frozenset = frozenset()


@dataclass(frozen=True)
class FlatArc:
    place: str
    transition: str
    direction: str
    expr: Expr
    source: Tuple[str, str]  # (page, arc id)


@dataclass
class FlatNet:
    """A net without substitution transitions.

    Names are qualified as ``Main.Subst.Local``. ``port_links`` maps each
    (instance, port) pair to the flat place it was fused into and
    ``instances`` maps instance names to their page.
    """

    places: Dict[str, FlatPlace]
    transitions: Dict[str, FlatTransition]
    arcs: List[FlatArc]
    initial: Marking
    instances: Dict[str, str]
    port_links: Dict[Tuple[str, str], str]
    colorsets: Dict[str, ColorSet] = field(default_factory=dict)
    variables: Dict[str, ColorSet] = field(default_factory=dict)

    @property
    def place_names(self) -> Tuple[str, ...]:
        return self.initial.places

    def transition_order(self) -> List[str]:
        return sorted(self.transitions)

    def resolve_place(self, ref: str) -> str:
        """Find the flat place named ``ref`` or, failing that, the unique
        place whose qualified name ends with ``.ref``."""
        if ref in self.places:
            return ref
        hits = [p for p in self.places if p.endswith("." + ref)]
        if len(hits) == 1:
            return hits[0]
        if not hits:
            raise KeyError(f"unknown place {ref!r}")
        raise KeyError(f"ambiguous place {ref!r}: matches {', '.join(sorted(hits))}")

    def resolve_transition(self, ref: str) -> str:
        if ref in self.transitions:
            return ref
        hits = [t for t in self.transitions if t.endswith("." + ref)]
        if len(hits) == 1:
            return hits[0]
        if not hits:
            raise KeyError(f"unknown transition {ref!r}")
        raise KeyError(f"ambiguous transition {ref!r}: matches {', '.join(sorted(hits))}")
