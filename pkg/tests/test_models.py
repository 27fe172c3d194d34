import pytest

from hcpnkit import models
from hcpnkit.checker import parse_props, run_script, validate_witness
from hcpnkit.netmodel import load_model, parse_model, validate_model
from hcpnkit.statespace import analyze, explore
from tests.helpers import wiring_mutations

# Dead transitions per input, grouped by the subnets that have any.
DEAD = {
    0: {"Cloud_Server": {"Cloud_Offloading", "Process_Results"},
        "Metaverse_Engine": {"Caching", "Execute_Intensive_Computations", "Get_Recommendations",
                             "Get_Tutorials"},
        "Virtual_Environment": set()},
    1: {"Cloud_Server": {"Cloud_Offloading", "Process_Results"},
        "Metaverse_Engine": {"Caching", "Execute_Intensive_Computations", "Get_Recommendations",
                             "Get_Tutorials"},
        "Virtual_Environment": {"Create_Avatar", "Create_Digital_Twin", "Enter_Virtual_Environment",
                                "Initiate_Connection"}},
    2: {"Cloud_Server": set(),
        "Metaverse_Engine": {"Caching", "Get_Tutorials", "Load_Data", "Process_Motion"},
        "Virtual_Environment": {"Create_Avatar", "Create_Digital_Twin", "Create_Ecosystem",
                                "Enter_Virtual_Environment"}},
    3: {"Cloud_Server": {"Cloud_Offloading", "Process_Results"},
        "Metaverse_Engine": {"Execute_Intensive_Computations", "Get_Recommendations", "Load_Data",
                             "Process_Motion"},
        "Virtual_Environment": set()},
}


def dead_by_subnet(report):
    out = {}
    for name in report.dead_transitions:
        _, subnet, local = name.split(".")
        out.setdefault(subnet, set()).add(local)
    return out


_GRAPHS = {}


def graph(cmd):
    if cmd not in _GRAPHS:
        _GRAPHS[cmd] = explore(load_model(models.atc_with_input(cmd)))
    return _GRAPHS[cmd]


@pytest.mark.parametrize("name", models.BUILTINS)
def test_builtins_validate_and_explore(name):
    m = parse_model(models.load_builtin(name))
    assert validate_model(m) == []
    g = explore(load_model(models.load_builtin(name)), max_nodes=50_000)
    assert not g.exhausted


@pytest.mark.parametrize("cmd", sorted(DEAD))
def test_dead_transition_sets(cmd):
    report = analyze(graph(cmd))
    found = dead_by_subnet(report)
    for subnet, want in DEAD[cmd].items():
        assert found.get(subnet, set()) == want, subnet
    # subnets outside the three tabulated ones have no dead transitions
    assert set(found) <= set(DEAD[cmd])


def test_cloud_server_idle_under_tutorials():
    bounds = analyze(graph(3)).bounds
    cloud = [p for p in bounds if p.startswith("ATC_Metaverse.Cloud_Server.")]
    assert cloud
    for p in cloud:
        assert bounds[p].integer == 0 and not bounds[p].multiset
    busy = analyze(graph(2)).bounds
    assert max(busy[p].integer for p in busy if p.startswith("ATC_Metaverse.Cloud_Server.")) >= 1


@pytest.mark.parametrize("script, cmds", [("fig13", (0, 1)), ("fig14", (2,)), ("fig15", (5,))])
def test_property_scripts_hold(script, cmds):
    for cmd in cmds:
        net = load_model(models.atc_with_input(cmd))
        results = run_script(graph(cmd), parse_props(models.load_props(script), net))
        assert results and all(r.verdict for r in results), (script, cmd)
        for r in results:
            if r.path_kind == "witness":
                assert validate_witness(graph(cmd), r.formula, r.path)


def test_fig14_has_witness():
    net = load_model(models.atc_with_input(2))
    (r,) = run_script(graph(2), parse_props(models.load_props("fig14"), net))
    assert r.path_kind == "witness" and len(r.path) > 1
    assert "(unnamed)" in r.labels


def test_fig15_false_without_end_command():
    net = load_model(models.atc_with_input(0))
    results = run_script(graph(0), parse_props(models.load_props("fig15"), net))
    assert not all(r.verdict for r in results)


@pytest.mark.parametrize("bad", [4, -1, 6, True, "2"])
def test_invalid_command_codes(bad):
    with pytest.raises(ValueError):
        models.atc_with_input(bad)


def test_unknown_builtin():
    with pytest.raises(KeyError):
        models.load_builtin("nope")
    with pytest.raises(KeyError):
        models.load_props("fig99")


def test_recommendations():
    assert models.conflict_recommendation(1) == "Select one aircraft and delay other"
    assert models.conflict_recommendation(2) == models.conflict_recommendation(3) == "Assign alternate runway"
    with pytest.raises(ValueError):
        models.conflict_recommendation(4)


@pytest.mark.parametrize("layer", sorted(models.LAYERS))
def test_templates_pass_wiring(layer):
    _, builtin = models.LAYERS[layer]
    m = parse_model(models.load_builtin(builtin))
    diags = models.validate_fomav_wiring(m, models.spec_for_builtin(builtin))
    assert [d for d in diags if d.severity == "error"] == []


def test_every_subnet_has_a_page():
    for layer, (main, builtin) in models.LAYERS.items():
        m = parse_model(models.load_builtin(builtin))
        assert m.main == main
        for name in models.layer_spec(layer):
            assert name in m.pages[main].substitutions


@pytest.mark.parametrize("case", wiring_mutations(), ids=lambda c: c[0])
def test_mutations_are_caught(case):
    _, m, spec, code = case
    codes = [d.code for d in models.validate_fomav_wiring(m, spec) if d.severity == "error"]
    assert code in codes


def test_missing_subnet_reported():
    m = parse_model(models.load_builtin("fomav_virtual_world"))
    spec = dict(models.spec_for_builtin("fomav_virtual_world"))
    spec["Ghost"] = models.SubnetSpec("VW", {})
    assert "missing subnet" in [d.code for d in models.validate_fomav_wiring(m, spec)]
