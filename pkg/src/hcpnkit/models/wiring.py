"""Port wiring of the four FoMAV layers and a checker for it.

Each subnet lists its ports as ``name: (direction, peer subnet, peer
port)``. A port's peer is the port on the other side of the shared socket.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Tuple

from ..netmodel.model import Diagnostic, ModelDef


@dataclass(frozen=True)
class PortSpec:
    direction: str  # "in" or "out"
    peer: str
    peer_port: str


@dataclass(frozen=True)
class SubnetSpec:
    layer: str
    ports: Dict[str, PortSpec]


def _sub(layer: str, **ports: Tuple[str, str, str]) -> SubnetSpec:
    return SubnetSpec(layer, {k: PortSpec(*v) for k, v in ports.items()})


SUBNETS: Dict[str, SubnetSpec] = {
    # physical world
    "User": _sub("PW", p1=("in", "Avatar", "p2"), p2=("out", "Avatar", "p1")),
    "IoT_Sensor": _sub("PW", p1=("in", "Virtual_Environment", "p3"),
                       p2=("out", "Virtual_Environment", "p1")),
    "Virtual_Service_Provider": _sub(
        "PW", p1=("in", "Virtual_Environment", "p4"), p2=("in", "Virtual_Goods_Services", "p2"),
        p3=("out", "Virtual_Environment", "p2"), p4=("out", "Virtual_Goods_Services", "p1")),
    "Physical_Service_Provider": _sub("PW", p1=("in", "Tangible_Goods_Services", "p2"),
                                      p2=("out", "Tangible_Goods_Services", "p1")),
    # virtual world
    "Avatar": _sub("VW", p1=("in", "User", "p2"), p2=("out", "User", "p1"),
                   p3=("in", "VR_AR", "p"), p4=("in", "Haptic", "p")),
    "Virtual_Environment": _sub(
        "VW", p1=("in", "IoT_Sensor", "p2"), p2=("in", "Virtual_Service_Provider", "p3"),
        p3=("out", "IoT_Sensor", "p1"), p4=("out", "Virtual_Service_Provider", "p1"),
        p5=("in", "Artificial_Intelligence", "p1"), p6=("in", "Digital_Twin", "p")),
    "Virtual_Goods_Services": _sub(
        "VW", p1=("in", "Virtual_Service_Provider", "p4"), p2=("out", "Virtual_Service_Provider", "p2"),
        p3=("in", "Artificial_Intelligence", "p2"), p4=("in", "Blockchain", "p1")),
    "Tangible_Goods_Services": _sub(
        "VW", p1=("in", "Physical_Service_Provider", "p2"), p2=("out", "Physical_Service_Provider", "p1"),
        p3=("in", "Artificial_Intelligence", "p3"), p4=("in", "Blockchain", "p2")),
    # metaverse engine
    "VR_AR": _sub("ME", p=("out", "Avatar", "p3")),
    "Haptic": _sub("ME", p=("out", "Avatar", "p4")),
    "Digital_Twin": _sub("ME", p=("out", "Virtual_Environment", "p6")),
    "Artificial_Intelligence": _sub(
        "ME", p1=("out", "Virtual_Environment", "p5"), p2=("out", "Virtual_Goods_Services", "p3"),
        p3=("out", "Tangible_Goods_Services", "p3")),
    "Blockchain": _sub("ME", p1=("out", "Virtual_Goods_Services", "p4"),
                       p2=("out", "Tangible_Goods_Services", "p4")),
    # infrastructure: abstract, no ports
    "Communication": _sub("INF"),
    "Computation": _sub("INF"),
    "Storage": _sub("INF"),
}

LAYERS = {
    "PW": ("Physical_World", "fomav_physical_world"),
    "VW": ("Virtual_World", "fomav_virtual_world"),
    "ME": ("Metaverse_Engine", "fomav_metaverse_engine"),
    "INF": ("Infrastructure", "fomav_infrastructure"),
}

WiringSpec = Dict[str, SubnetSpec]


def layer_spec(layer: str) -> WiringSpec:
    return {name: s for name, s in SUBNETS.items() if s.layer == layer}


def spec_for_builtin(name: str) -> WiringSpec:
    for layer, (_, builtin) in LAYERS.items():
        if builtin == name:
            return layer_spec(layer)
    raise KeyError(f"no wiring spec for {name!r}")


def validate_fomav_wiring(m: ModelDef, spec: WiringSpec) -> List[Diagnostic]:
    """Compare the substitutions on the main page of ``m`` with ``spec``.

    Each spec subnet must be a substitution of that name; each required
    port must exist with the right direction and share its socket with the
    named peer port. Ports the spec does not mention are reported with
    severity "info".
    """
    diags: List[Diagnostic] = []
    main = m.pages.get(m.main) if m.main else None
    if main is None:
        return [Diagnostic("missing subnet", "model has no main page")]
    # socket -> [(instance, port)] over all substitutions of the main page
    attached: Dict[str, List[Tuple[str, str]]] = {}
    for sub in main.substitutions.values():
        for socket, port in sub.socket_map:
            attached.setdefault(socket, []).append((sub.name, port))

    for name in sorted(spec):
        want = spec[name]
        sub = main.substitutions.get(name)
        if sub is None:
            diags.append(Diagnostic("missing subnet", f"subnet {name} is not instantiated on page {m.main}"))
            continue
        page = m.pages.get(sub.subpage)
        if page is None:
            diags.append(Diagnostic("missing subnet", f"subnet {name} uses unknown page {sub.subpage!r}",
                                    sub.line, sub.col))
            continue
        sockets = {port: socket for socket, port in sub.socket_map}
        for pname in sorted(want.ports):
            ps = want.ports[pname]
            place = page.places.get(pname)
            if place is None or not place.is_port:
                diags.append(Diagnostic("missing required port",
                                        f"{name}.{pname}: required {ps.direction}-port towards "
                                        f"{ps.peer} is missing", sub.line, sub.col))
                continue
            if place.port != ps.direction:
                diags.append(Diagnostic("wrong direction",
                                        f"{name}.{pname} is declared {place.port} but must be "
                                        f"{ps.direction} (peer {ps.peer})", place.line, place.col))
            socket = sockets.get(pname)
            if socket is None:
                diags.append(Diagnostic("missing peer", f"{name}.{pname} is not bound to any socket",
                                        sub.line, sub.col))
                continue
            others = [(i, p) for i, p in attached.get(socket, []) if i != name]
            if (ps.peer, ps.peer_port) not in others:
                found = ", ".join(f"{i}.{p}" for i, p in others) or "nothing"
                diags.append(Diagnostic("peer mismatch",
                                        f"{name}.{pname} must connect to {ps.peer}.{ps.peer_port} "
                                        f"but socket {socket} reaches {found}", sub.line, sub.col))
        for place in page.ports():
            if place.name not in want.ports:
                diags.append(Diagnostic("extra port", f"{name}.{place.name} is not part of the "
                                        "layer wiring", place.line, place.col, severity="info"))
    return diags
