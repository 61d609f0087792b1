import numpy as np
import pytest

from builders import two_pin_layout
from oracles import grid_cost, random_grid_case
from salsy.geometry import Rect
from salsy.layout import Layout, Net, ViaInstance, WireSegment, net_connected
from salsy.quality import drc_lite
from salsy.gridroute import (RouteError, RouteGrid, RouteRule, default_rule, insert_multicut_vias, reroute,
                             route_net, widen_net, widen_target)
from salsy.tech import Layer


def _layers(tech):
    return [(l.name, l.horizontal) for l in tech.routing_layers]


def _route(tech, nx, ny, a, b, obstacles=()):
    la = two_pin_layout(tech, nx, ny, a, b, obstacles)
    grid = RouteGrid.from_layout(la)
    return la, grid, route_net(grid, la, la.nets["n"])


def test_straight_run_on_preferred_layer(tech4):
    # M2 is vertical, so five steps along j cost 5
    _, _, r = _route(tech4, 6, 8, ("M2", 0, 0), ("M2", 0, 5))
    assert (r.cost, r.fallback_used) == (5, False)
    assert len(r.segments) == 1 and not r.vias


def test_empty_grid_is_manhattan_plus_vias(tech4):
    la, _, r = _route(tech4, 8, 8, ("M1", 0, 0), ("M1", 4, 3))
    # up to M2, 3 vertical, up to M3, 4 horizontal, back down two layers
    assert r.cost == 7 + 4 * 2
    assert r.cost == grid_cost(8, 8, _layers(tech4), ("M1", 0, 0), ("M1", 4, 3), [], True)
    assert net_connected(la, la.nets["n"])
    assert {s.layer for s in r.segments} <= {"M2", "M3"}


def test_detour_around_obstacle(tech4):
    _, _, r = _route(tech4, 8, 8, ("M1", 0, 0), ("M3", 5, 6), [("M2", 2, 2)])
    assert (r.cost, r.fallback_used) == (15, False)


@pytest.mark.parametrize("seed", range(40))
def test_cost_matches_dijkstra(tech4, seed):
    rng = np.random.default_rng(1000 + seed)
    while True:
        nx, ny, a, b, obs = random_grid_case(rng, tech4, max_n=16)
        soft = grid_cost(nx, ny, _layers(tech4), a, b, obs, False)
        if soft is not None:
            break
    hard = grid_cost(nx, ny, _layers(tech4), a, b, obs, True)
    la, _, r = _route(tech4, nx, ny, a, b, obs)
    assert r.fallback_used == (hard is None)
    assert r.cost == (soft if hard is None else hard)
    assert net_connected(la, la.nets["n"])


def test_fallback_when_preferred_layers_blocked(tech4):
    nx, ny = 7, 3
    wall = [(l, i, j) for l in ("M2", "M3", "M4") for i in range(nx) for j in range(ny)]
    _, _, r = _route(tech4, nx, ny, ("M1", 0, 1), ("M1", 5, 1), wall)
    assert r.fallback_used
    # five horizontal steps on the non-preferred M1
    assert r.cost == 5 * 11
    assert {s.layer for s in r.segments} == {"M1"}


def test_unroutable_leaves_net_untouched(tech4):
    cage = [("M1", 2, 3), ("M1", 4, 3), ("M1", 3, 2), ("M1", 3, 4), ("M2", 3, 3)]
    la = two_pin_layout(tech4, 8, 8, ("M1", 0, 0), ("M1", 3, 3), cage)
    grid = RouteGrid.from_layout(la)
    with pytest.raises(RouteError, match="unroutable"):
        route_net(grid, la, la.nets["n"])
    assert la.nets["n"].route == [] and la.nets["n"].vias == []
    assert grid.consistent_with(la)


def test_single_pin_net_rejected(tech4):
    la = two_pin_layout(tech4, 4, 4, ("M1", 0, 0), ("M1", 3, 3))
    la.nets["n"].pins = la.nets["n"].pins[:1]
    with pytest.raises(RouteError, match="fewer than two"):
        route_net(RouteGrid.from_layout(la), la, la.nets["n"])


def test_commit_false_keeps_old_route(tech4):
    la = two_pin_layout(tech4, 8, 8, ("M1", 0, 0), ("M1", 4, 3))
    grid = RouteGrid.from_layout(la)
    r = route_net(grid, la, la.nets["n"], commit=False)
    assert r.segments and la.nets["n"].route == []
    assert grid.consistent_with(la)


def test_default_rule_by_net_kind(small):
    layout, _, _ = small
    sig = next(n for n in layout.nets.values() if n.kind == "signal")
    assert default_rule(layout, sig).preferred_layers == ("M2", "M3", "M4")
    assert default_rule(layout, Net("c", kind="clock")).preferred_layers == ("M4", "M5", "M6")


def test_rule_validation(tech):
    with pytest.raises(ValueError):
        RouteRule(()).validate(tech)
    with pytest.raises(ValueError):
        RouteRule(("V1",)).validate(tech)
    with pytest.raises(ValueError):
        RouteRule(("M2",), width=900).validate(tech)


def test_wide_rule_keeps_spacing(tech4):
    la = two_pin_layout(tech4, 10, 10, ("M1", 0, 0), ("M1", 8, 7), [("M3", 4, 4), ("M2", 6, 2)])
    grid = RouteGrid.from_layout(la)
    route_net(grid, la, la.nets["n"], RouteRule(("M2", "M3"), width=300))
    assert [v for v in drc_lite(la) if v.kind == "spacing"] == []
    assert any(s.width == 300 for s in la.nets["n"].route)


def test_reroute_keeps_grid_consistent(small):
    layout, _, _ = small
    grid = RouteGrid.from_layout(layout)
    names = sorted(n for n, net in layout.nets.items() if net.kind == "signal" and len(net.pins) >= 2)[:8]
    res = reroute(grid, layout, names)
    assert set(res) == set(names)
    assert grid.consistent_with(layout)
    assert all(net_connected(layout, layout.nets[n]) for n in names)
    assert drc_lite(layout) == []


# --- widening and via upgrades ----------------------------------------------------

def test_widen_target():
    layer = Layer("MX", "routing", 1, "horizontal", 400, 200, 200, 200, 800, 200)
    assert widen_target(layer, 4, 1000) == 800
    assert widen_target(layer, 4, 500) == 500
    assert widen_target(layer, 1, 1000) == 200


def test_widen_factor_one_is_identity(small):
    layout, _, _ = small
    net = next(n for n in layout.nets.values() if n.route)
    before = list(net.route)
    res = widen_net(layout, net, 1.0, 400)
    assert net.route == before and res.widened == 0


def test_widen_cap_below_default_warns(small):
    layout, _, _ = small
    net = next(n for n in layout.nets.values() if n.route)
    before = list(net.route)
    res = widen_net(layout, net, 4.0, 50)
    assert res.warnings and net.route == before


def test_widen_keeps_clear_of_neighbours(small):
    layout, _, _ = small
    for name in sorted(layout.nets)[:10]:
        widen_net(layout, layout.nets[name], 4.0, 400)
    assert [v for v in drc_lite(layout) if v.kind == "spacing"] == []


def test_multicut_upgrade_is_drc_clean(small):
    layout, _, _ = small
    single = sum(1 for n in layout.nets.values() for v in n.vias if v.via == "V12")
    replaced, skipped = insert_multicut_vias(layout)
    assert replaced + skipped == single and replaced > 0
    assert drc_lite(layout) == []
    cuts = [layout.tech.vias[v.via].cut_count for n in layout.nets.values() for v in n.vias
            if v.via.startswith("V12")]
    assert sum(c > 1 for c in cuts) == replaced


def test_hemmed_in_via_is_skipped(tech):
    la = Layout("v", tech, Rect(0, 0, 2000, 2000), [], {}, {}, {})
    x = y = 900
    la.nets["a"] = Net("a", route=[WireSegment("M1", x, y, x + 400, y, 100)], vias=[ViaInstance("V12", x, y)])
    la.nets["b"] = Net("b", route=[WireSegment("M2", x + dx, y + dy, x + dx, y + dy, 100)
                                   for dx, dy in ((200, 0), (-200, 0), (0, 200), (0, -200))])
    assert drc_lite(la) == []
    assert insert_multicut_vias(la) == (0, 1)
    assert la.nets["a"].vias == [ViaInstance("V12", x, y)]


def test_multicut_restricted_to_named_nets(small):
    layout, _, _ = small
    name = next(n for n, net in sorted(layout.nets.items()) if any(v.via == "V12" for v in net.vias))
    replaced, _ = insert_multicut_vias(layout, nets=[name])
    multi = {n for n, net in layout.nets.items() for v in net.vias if layout.tech.vias[v.via].cut_count > 1}
    assert replaced > 0 and multi == {name}
