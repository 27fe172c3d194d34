import time

import pytest

from hcpnkit import models
from hcpnkit.engine import enabled
from hcpnkit.kernel import Multiset, canonical_key
from hcpnkit.netmodel import load_model
from hcpnkit.report import render_report
from hcpnkit.statespace import (IncompleteGraphError, analyze, dead_markings, explore,
                                place_bounds, transition_liveness)
from tests.helpers import FIXTURES, PRODUCER, oracle_bounds, oracle_reachable, random_net


def net_of(body, decls="colorset INT = int; var x : INT;"):
    return load_model(f"{decls}\nmain N;\npage N {{\n{body}\n}}\n")


def test_two_node_cycle():
    g = explore(net_of("""place a : INT init 1`1; place b : INT;
trans go; arc a -> go : 1`x; arc go -> b : 1`x;
trans back; arc b -> back : 1`x; arc back -> a : 1`x;"""))
    assert (len(g.nodes), len(g.edges)) == (2, 2)
    assert dead_markings(g) == []
    assert transition_liveness(g) == ([], ["N.back", "N.go"])


def test_linear_net_ends_dead():
    g = explore(net_of("""place a : INT init 1`1; place b : INT; place c : INT;
trans one; arc a -> one : 1`x; arc one -> b : 1`x;
trans two; arc b -> two : 1`x; arc two -> c : 1`x;"""))
    assert len(g.nodes) == 3
    (dead,) = dead_markings(g)
    assert g.nodes[dead]["N.c"] == Multiset.of(1)


def test_unsatisfiable_guard_gives_dead_transition():
    g = explore(net_of("""place a : INT init 1`1;
trans never guard x = 2; arc a -> never : 1`x;"""))
    assert transition_liveness(g) == (["N.never"], [])
    assert len(g.nodes) == 1 and dead_markings(g) == [g.initial]


def test_bounds_example():
    g = explore(net_of("""place a : INT init 1`1 ++ 1`2; place b : INT;
trans mv; arc a -> mv : 1`x; arc mv -> b : 1`x;"""))
    bounds, pages = place_bounds(g)
    assert bounds["N.b"].integer == 2
    assert bounds["N.b"].multiset == Multiset.of(1, 2)
    assert pages == {"N": 2}


def test_producer_budget():
    start = time.perf_counter()
    g = explore(load_model(PRODUCER), max_nodes=100)
    assert time.perf_counter() - start < 1.0
    assert g.exhausted and len(g.nodes) == 100
    with pytest.raises(IncompleteGraphError):
        dead_markings(g)
    r = analyze(g)
    assert r.exhausted and r.nodes == 100 and r.bounds is None


def test_budget_not_hit_when_exact():
    g = explore(net_of("place a : INT init 1`1; trans t; arc a -> t : 1`x;"), max_nodes=2)
    assert not g.exhausted and len(g.nodes) == 2


def test_node_numbering_follows_canonical_key():
    g = explore(load_model((FIXTURES / "twin_workers.hcpn").read_text()))
    keys = [canonical_key(m) for m in g.nodes]
    assert keys == sorted(keys)
    assert len(set(keys)) == len(keys)


def test_edges_match_enabled_counts():
    for seed in range(15):
        net = random_net(seed)
        g = explore(net)
        assert len(g.edges) == sum(len(enabled(net, m)) for m in g.nodes)
        for s, be, d in g.edges:
            assert d in g.successors(s)


@pytest.mark.parametrize("seed", range(25))
def test_explore_matches_oracle(seed):
    net = random_net(seed)
    g = explore(net)
    reach = oracle_reachable(net)
    assert set(g.nodes) == reach and len(g.nodes) == len(reach)
    bounds, _ = place_bounds(g)
    for p, (integer, per) in oracle_bounds(net, reach).items():
        assert bounds[p].integer == integer
        assert dict(bounds[p].multiset.items()) == per
        assert bounds[p].integer <= bounds[p].multiset.size()


@pytest.mark.parametrize("path", ["twin_workers.hcpn", "nested_relay.hcpn"])
def test_workers_do_not_change_result(path):
    net = load_model((FIXTURES / path).read_text())
    texts = {render_report(analyze(explore(net, workers=w)), "json") for w in (1, 2, 8)}
    assert len(texts) == 1


def test_page_bound_counts_fused_places_once():
    net = load_model((FIXTURES / "twin_workers.hcpn").read_text())
    _, pages = place_bounds(explore(net))
    # jobs and done belong to Shop; a worker may grab every job at once
    assert pages == {"Shop": 3, "Shop.A": 3, "Shop.B": 3}


def test_atc_sizes_are_stable():
    net = load_model(models.atc_with_input(0))
    a, b = explore(net), explore(net, workers=4)
    assert (len(a.nodes), len(a.edges)) == (len(b.nodes), len(b.edges))
    assert a.nodes == b.nodes
