"""Bundled models: the four FoMAV layer templates, the ATC Metaverse case
model and its property scripts, and the conflict recommendation table."""
from __future__ import annotations

import re
from importlib import resources
from typing import Dict, Tuple

from .wiring import (LAYERS, SUBNETS, PortSpec, SubnetSpec, WiringSpec, layer_spec,
                     spec_for_builtin, validate_fomav_wiring)

BUILTINS = (
    "fomav_physical_world",
    "fomav_virtual_world",
    "fomav_metaverse_engine",
    "fomav_infrastructure",
    "atc_metaverse",
)
PROPERTY_SCRIPTS = ("fig13", "fig14", "fig15")

COMMAND_CODES: Dict[int, str] = {
    0: "create virtual environment",
    1: "avatar movement / update",
    2: "get recommendations",
    3: "get cached tutorials",
    5: "terminate session",
}

# Aircraft conflict scenarios and the advice attached to cloud predictions.
SCENARIOS: Dict[int, Tuple[str, str]] = {
    1: ("Two aircraft trying to land at the same time",
        "Select one aircraft and delay other"),
    2: ("One aircraft taking off while another is landing",
        "Assign alternate runway"),
    3: ("One aircraft de-trailing while another is landing",
        "Assign alternate runway"),
}


def _asset(filename: str) -> str:
    return resources.files(__name__).joinpath("assets", filename).read_text(encoding="utf-8")


def load_builtin(name: str) -> str:
    """Source text of a bundled ``.hcpn`` model."""
    if name not in BUILTINS:
        raise KeyError(f"unknown builtin model {name!r}; choose from {', '.join(BUILTINS)}")
    return _asset(name + ".hcpn")


def load_props(name: str) -> str:
    """Source text of a bundled ``.ctl`` property script (fig13/14/15)."""
    name = name[:-4] if name.endswith(".ctl") else name
    if name not in PROPERTY_SCRIPTS:
        raise KeyError(f"unknown property script {name!r}; choose from {', '.join(PROPERTY_SCRIPTS)}")
    return _asset(name + ".ctl")


_START_TOKEN = re.compile(r'(place\s+Start\s*:\s*PACKET\s+init\s+)1`\("ATC","Data",-?\d+\)')


def atc_with_input(cmd: int) -> str:
    """The ATC model with the controller's start token carrying flag ``cmd``."""
    if isinstance(cmd, bool) or not isinstance(cmd, int) or cmd not in COMMAND_CODES:
        raise ValueError(f"invalid command code {cmd!r}; valid codes are "
                         + ", ".join(str(c) for c in COMMAND_CODES))
    text, n = _START_TOKEN.subn(lambda mt: f'{mt.group(1)}1`("ATC","Data",{cmd})', load_builtin("atc_metaverse"))
    if n != 1:
        raise RuntimeError("bundled ATC model has no unique start token")
    return text


def conflict_recommendation(scenario: int) -> str:
    if scenario not in SCENARIOS:
        raise ValueError(f"scenario must be 1, 2 or 3, not {scenario!r}")
    return SCENARIOS[scenario][1]


__all__ = [
    "BUILTINS", "COMMAND_CODES", "LAYERS", "PROPERTY_SCRIPTS", "SCENARIOS", "SUBNETS", "PortSpec",
    "SubnetSpec", "WiringSpec", "atc_with_input", "conflict_recommendation", "layer_spec",
    "load_builtin", "load_props", "spec_for_builtin", "validate_fomav_wiring",
]
