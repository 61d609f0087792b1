import itertools
import math

import numpy as np
import pytest

from salsy.config import ScoreConfig
from salsy.geometry import Rect
from salsy.layout import IO, Instance, IOPin, Layout, Net, Row, WireSegment
from salsy.quality import (TimingError, analyze_timing, cell_area, drc_lite, power_proxy, quality_report,
                           wire_cap)


def _cells(tech, masters, name="q"):
    """Cells side by side in one row, named c0, c1, ..."""
    site = tech.site
    width = sum(tech.masters[m].width // site.width for m in masters) + 2
    row = Row("r0", 0, 0, width, site.width, site.height)
    insts, x = {}, 0
    for k, m in enumerate(masters):
        insts[f"c{k}"] = Instance(f"c{k}", tech.masters[m], x, 0)
        x += tech.masters[m].width
    return Layout(name, tech, Rect(0, 0, width * site.width, site.height), [row], insts, {}, {})


def _io(name, net, direction, x):
    return IOPin(name, net, direction, "M2", Rect(-50, -50, 50, 50), x, 100)


# --- area and power -------------------------------------------------------------

def test_cell_area_empty(tech):
    assert cell_area(_cells(tech, [])) == 0


def test_cell_area_ignores_fillers(tech):
    la = _cells(tech, ["BUF_X1", "FILL4", "DFF_X1"])
    assert cell_area(la) == (2 + 8) * 200 * 1600


@pytest.mark.parametrize("k", [1, 3, 7])
def test_adding_buffers_adds_their_area(small, k):
    layout, _, _ = small
    before = cell_area(layout)
    buf = layout.tech.masters["BUF_X1"]
    for i in range(k):
        layout.instances[f"extra{i}"] = Instance(f"extra{i}", buf, 0, 0)
    assert cell_area(layout) - before == k * buf.width * buf.height


def test_power_without_activity_is_leakage(small):
    layout, _, cfg = small
    leak = sum(i.master.leakage_power for i in layout.instances.values())
    assert power_proxy(layout, ScoreConfig(activity=0.0)) == pytest.approx(leak)


def test_power_two_cells_closed_form(tech):
    la = _cells(tech, ["INV_X1", "BUF_X1"])
    la.nets["n"] = Net("n", pins=[("c0", "Z"), ("c1", "A")])
    cfg = ScoreConfig(clock_period=500.0, activity=0.2, voltage=1.0)
    # INV Z at col 1 row 4 -> (300, 900); BUF A at col 0 row 4 of a cell at x=400 -> (500, 900)
    unit_c = tech.layer("M2").unit_c
    load = 200 * unit_c + tech.masters["BUF_X1"].input_cap
    want = 0.015 + 0.025 + 0.2 * load * 1.0 * (1000.0 / 500.0)
    assert power_proxy(la, cfg) == pytest.approx(want)


def test_buffer_insertion_raises_power(tech):
    la = _cells(tech, ["INV_X1", "BUF_X1", "BUF_X1"])
    la.nets["n"] = Net("n", pins=[("c0", "Z"), ("c2", "A")])
    before = power_proxy(la)
    la.nets["n"] = Net("n", pins=[("c0", "Z"), ("c1", "A")])
    la.nets["n_b"] = Net("n_b", pins=[("c1", "Z"), ("c2", "A")])
    assert power_proxy(la) > before


def test_routed_wire_cap_uses_segment_length(tech):
    la = _cells(tech, ["INV_X1", "BUF_X1"])
    net = Net("n", pins=[("c0", "Z"), ("c1", "A")],
              route=[WireSegment("M3", 300, 900, 900, 900, 100), WireSegment("M2", 900, 900, 900, 1300, 100)])
    assert wire_cap(la, net) == pytest.approx(600 * tech.layer("M3").unit_c + 400 * tech.layer("M2").unit_c)


# --- timing ---------------------------------------------------------------------

def test_single_endpoint_chain(tech):
    la = _cells(tech, ["BUF_X1", "BUF_X1", "BUF_X1"])
    la.io_pins = {"in": _io("in", "n0", "input", 100), "out": _io("out", "n3", "output", 1900)}
    la.nets["n0"] = Net("n0", pins=[(IO, "in"), ("c0", "A")])
    for k in range(2):
        la.nets[f"n{k + 1}"] = Net(f"n{k + 1}", pins=[(f"c{k}", "Z"), (f"c{k + 1}", "A")])
    la.nets["n3"] = Net("n3", pins=[("c2", "Z"), (IO, "out")])
    t = analyze_timing(la, ScoreConfig(clock_period=10.0))
    assert t.endpoints == 1
    assert t.wns < 0
    assert t.tns == pytest.approx(t.wns)
    relaxed = analyze_timing(la, ScoreConfig(clock_period=1e4))
    assert relaxed.wns > 0 and relaxed.tns == 0
    # the arrival time does not depend on the period
    assert 10.0 - t.wns == pytest.approx(1e4 - relaxed.wns)


def test_combinational_cycle_raises(tech):
    la = _cells(tech, ["INV_X1", "INV_X1"])
    la.nets["a"] = Net("a", pins=[("c0", "Z"), ("c1", "A")])
    la.nets["b"] = Net("b", pins=[("c1", "Z"), ("c0", "A")])
    with pytest.raises(TimingError, match="cycle"):
        analyze_timing(la)


def test_cycle_through_a_flop_is_fine(tech):
    la = _cells(tech, ["INV_X1", "DFF_X1"])
    la.nets["a"] = Net("a", pins=[("c0", "Z"), ("c1", "D")])
    la.nets["b"] = Net("b", pins=[("c1", "Q"), ("c0", "A")])
    t = analyze_timing(la)
    assert list(t.slacks) == ["c1/D"]


def _random_dag(tech, rng, n):
    masters = [str(rng.choice(["INV_X1", "BUF_X1", "NAND2_X1", "NOR2_X1"])) for _ in range(n)]
    la = _cells(tech, masters, "dag")
    sinks_of = {k: [] for k in range(n)}
    for k in range(1, n):
        for p in la.instances[f"c{k}"].master.input_pins:
            src = int(rng.integers(0, k))
            sinks_of[src].append((f"c{k}", p.name))
    for k, sinks in sinks_of.items():
        if sinks:
            la.nets[f"n{k}"] = Net(f"n{k}", pins=[(f"c{k}", "Z")] + sinks)
    return la


def _pin_xy(la, ref):
    return la.pin_shapes(ref)[0][1].center


def _brute_force_arrivals(la):
    """Worst endpoint arrival by enumerating every path back from each endpoint."""
    m2 = la.tech.layer("M2")
    drv_of = {}
    load = {}
    for net in la.nets.values():
        drv = net.pins[0]
        xs = [_pin_xy(la, r)[0] for r in net.pins]
        ys = [_pin_xy(la, r)[1] for r in net.pins]
        hp = max(xs) - min(xs) + max(ys) - min(ys)
        load[drv[0]] = hp * m2.unit_c + sum(la.instances[i].master.input_cap for i, _ in net.pins[1:])
        for r in net.pins[1:]:
            dx, dy = _pin_xy(la, drv)
            sx, sy = _pin_xy(la, r)
            d = abs(sx - dx) + abs(sy - dy)
            drv_of[r] = (drv[0], d * m2.unit_r * (d * m2.unit_c / 2 + la.instances[r[0]].master.input_cap) * 1e-3)

    def paths(cell):
        m = la.instances[cell].master
        own = m.intrinsic_delay + m.drive_slope * load.get(cell, 0.0)
        heads = [drv_of[(cell, p.name)] for p in m.input_pins if (cell, p.name) in drv_of]
        if not heads:
            yield own
            return
        for src, wd in heads:
            for upstream in paths(src):
                yield upstream + wd + own

    ends = [c for c in la.instances if c not in load]
    return max(max(paths(c)) for c in ends)


@pytest.mark.parametrize("seed", range(15))
def test_timing_matches_path_enumeration(tech, seed):
    la = _random_dag(tech, np.random.default_rng(seed), 9)
    period = 1000.0
    t = analyze_timing(la, ScoreConfig(clock_period=period))
    assert period - t.wns == pytest.approx(_brute_force_arrivals(la))


# --- DRC-lite -------------------------------------------------------------------

def _wires(tech, nets):
    la = Layout("d", tech, Rect(0, 0, 4000, 4000), [], {}, {}, {})
    for name, segs in nets.items():
        la.nets[name] = Net(name, route=segs)
    return la


def test_generated_layout_is_drc_clean(small):
    assert drc_lite(small[0]) == []


def test_max_width_violation(tech):
    la = _wires(tech, {"a": [WireSegment("M3", 100, 1100, 2100, 1100, 900)]})
    assert [v.kind for v in drc_lite(la)] == ["max_width"]


def test_max_width_boundary(tech):
    la = _wires(tech, {"a": [WireSegment("M3", 100, 1100, 2100, 1100, 800)]})
    assert drc_lite(la) == []


@pytest.mark.parametrize("gap,bad", [(99, True), (100, False), (101, False)])
def test_spacing_boundary(tech, gap, bad):
    # two M2 shapes side by side; the second is shifted so the edge gap is exactly ``gap``
    a = WireSegment("M2", 100, 100, 100, 1500, 100)
    shift = 100 + gap
    b = WireSegment("M2", 100 + shift, 100, 100 + shift, 1500, 100)
    vs = drc_lite(_wires(tech, {"a": [a], "b": [b]}))
    spacing = [v for v in vs if v.kind == "spacing"]
    assert bool(spacing) == bad
    if bad:
        assert spacing[0].objects == ("a", "b")


def test_same_net_shapes_do_not_violate_spacing(tech):
    a = WireSegment("M2", 100, 100, 100, 1500, 100)
    b = WireSegment("M2", 150, 100, 150, 1500, 100)
    assert [v.kind for v in drc_lite(_wires(tech, {"a": [a, b]})) if v.kind == "spacing"] == []


def test_spacing_matches_pairwise_oracle(tech):
    rng = np.random.default_rng(3)
    nets = {}
    for k in range(40):
        x, y = (int(v) * 50 for v in rng.integers(0, 60, 2))
        nets[f"n{k}"] = [WireSegment("M4", x, y, x, y + 200, 100)]
    la = _wires(tech, nets)
    got = {v.objects for v in drc_lite(la) if v.kind == "spacing"}
    want = set()
    for (na, sa), (nb, sb) in itertools.combinations(sorted(nets.items()), 2):
        gx, gy = sa[0].rect.gap(sb[0].rect)
        if gx < 100 and gy < 100:
            want.add((na, nb))
    assert got == want


def test_quality_report_fields(small):
    layout, _, cfg = small
    q = quality_report(layout, cfg)
    assert q.cell_area == cell_area(layout)
    assert q.drc_count == 0
    assert q.endpoints > 0 and math.isfinite(q.wns)
