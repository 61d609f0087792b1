"""Design-quality proxies: cell area, power, Elmore timing and DRC-lite."""

from __future__ import annotations

import graphlib
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .config import ScoreConfig
from .geometry import Rect
from .layout import (IO, Layout, Net, Violation, check_legal_placement, instance_footprint,
                     net_connected, on_track)

PS_PER_OHM_FF = 1e-3


class TimingError(ValueError):
    pass


@dataclass
class QualityReport:
    cell_area: int
    total_power: float
    wns: float
    tns: float
    endpoints: int
    drc: list[Violation] = field(default_factory=list)

    @property
    def drc_count(self) -> int:
        return len(self.drc)


def cell_area(layout: Layout) -> int:
    return sum(instance_footprint(i).area for i in layout.instances.values()
               if i.placed and not i.master.is_filler)


def _wire_layer(layout: Layout):
    rl = layout.tech.routing_layers
    return rl[1] if len(rl) > 1 else rl[0]


def _pin_point(layout: Layout, ref) -> tuple[int, int]:
    shapes = layout.pin_shapes(ref)
    return shapes[0][1].center if shapes else (0, 0)


def _hpwl(layout: Layout, net: Net) -> int:
    pts = [_pin_point(layout, ref) for ref in net.pins]
    if len(pts) < 2:
        return 0
    xs, ys = [p[0] for p in pts], [p[1] for p in pts]
    return max(xs) - min(xs) + max(ys) - min(ys)


def wire_cap(layout: Layout, net: Net) -> float:
    """Wire capacitance in fF; unrouted nets use half-perimeter wirelength."""
    if net.route:
        return sum(s.length * layout.tech.layer(s.layer).unit_c for s in net.route)
    return _hpwl(layout, net) * _wire_layer(layout).unit_c


def pin_cap(layout: Layout, ref) -> float:
    inst, _ = ref
    if inst == IO:
        return 0.0
    return layout.instances[inst].master.input_cap


def net_load(layout: Layout, net: Net) -> float:
    return wire_cap(layout, net) + sum(pin_cap(layout, r) for r in layout.sinks(net))


def power_proxy(layout: Layout, cfg: ScoreConfig | None = None) -> float:
    """Leakage plus switching power in uW."""
    cfg = cfg or ScoreConfig()
    leak = sum(i.master.leakage_power for i in layout.instances.values() if not i.master.is_filler)
    f_ghz = 1000.0 / cfg.clock_period
    dyn = sum(net_load(layout, n) for n in layout.nets.values())
    return leak + cfg.activity * dyn * cfg.voltage ** 2 * f_ghz


# --- Elmore ----------------------------------------------------------------

def elmore_delays(layout: Layout, net: Net) -> dict[tuple[str, str], float]:
    """Wire delay (ps) from the driver to each sink over the routed RC tree.

    Sinks that the routing does not reach fall back to a Manhattan estimate.
    """
    driver = layout.driver(net)
    sinks = layout.sinks(net)
    if driver is None or not sinks:
        return {}
    tech = layout.tech
    out: dict[tuple[str, str], float] = {}
    if net.routed:
        adj: dict = {}
        cap: dict = {}

        def link(a, b, r, c):
            adj.setdefault(a, []).append((b, r))
            adj.setdefault(b, []).append((a, r))
            cap[a] = cap.get(a, 0.0) + c / 2
            cap[b] = cap.get(b, 0.0) + c / 2

        points: dict[str, set] = {}
        for s in net.route:
            points.setdefault(s.layer, set()).update({(s.x0, s.y0), (s.x1, s.y1)})
        for v in net.vias:
            d = tech.vias[v.via]
            points.setdefault(d.bottom, set()).add((v.x, v.y))
            points.setdefault(d.top, set()).add((v.x, v.y))
        for s in net.route:
            layer = tech.layer(s.layer)
            scale = layer.unit_r * (layer.default_width / s.width if s.width else 1.0)
            lx, hx = sorted((s.x0, s.x1))
            ly, hy = sorted((s.y0, s.y1))
            on = sorted(p for p in points[s.layer] if lx <= p[0] <= hx and ly <= p[1] <= hy)
            for p, q in zip(on, on[1:]):
                d = abs(q[0] - p[0]) + abs(q[1] - p[1])
                link((s.layer, *p), (s.layer, *q), d * scale, d * layer.unit_c)
        for v in net.vias:
            d = tech.vias[v.via]
            link((d.bottom, v.x, v.y), (d.top, v.x, v.y), d.resistance, 0.0)
        for ref in net.pins:
            for layer, r in layout.pin_shapes(ref):
                for p in points.get(layer, ()):
                    if r.contains_point(*p):
                        link(("pin", ref), (layer, *p), 0.0, 0.0)
        for ref in sinks:
            key = ("pin", ref)
            cap[key] = cap.get(key, 0.0) + pin_cap(layout, ref)
        root = ("pin", driver)
        if root in adj:
            parent = {root: None}
            redge = {root: 0.0}
            order = []
            dq = deque([root])
            while dq:
                u = dq.popleft()
                order.append(u)
                for w, r in adj[u]:
                    if w not in parent:
                        parent[w] = u
                        redge[w] = r
                        dq.append(w)
            down = {u: cap.get(u, 0.0) for u in order}
            for u in reversed(order[1:]):
                down[parent[u]] += down[u]
            delay = {root: 0.0}
            for u in order[1:]:
                delay[u] = delay[parent[u]] + redge[u] * down[u]
            for ref in sinks:
                if ("pin", ref) in delay:
                    out[ref] = delay[("pin", ref)] * PS_PER_OHM_FF
    wl = _wire_layer(layout)
    dx, dy = _pin_point(layout, driver)
    for ref in sinks:
        if ref not in out:
            sx, sy = _pin_point(layout, ref)
            d = abs(sx - dx) + abs(sy - dy)
            out[ref] = d * wl.unit_r * (d * wl.unit_c / 2 + pin_cap(layout, ref)) * PS_PER_OHM_FF
    return out


# --- static timing ---------------------------------------------------------

@dataclass
class TimingResult:
    wns: float
    tns: float
    slacks: dict = field(default_factory=dict)  # endpoint label -> slack

    @property
    def endpoints(self) -> int:
        return len(self.slacks)


def analyze_timing(layout: Layout, cfg: ScoreConfig | None = None) -> TimingResult:
    cfg = cfg or ScoreConfig()
    period = cfg.clock_period
    out_net: dict[tuple[str, str], Net] = {}
    in_net: dict[tuple[str, str], Net] = {}
    for net in layout.nets.values():
        if net.kind == "clock":
            continue
        for ref in net.pins:
            (out_net if layout.pin_direction(ref) == "output" else in_net)[ref] = net
    wire: dict[str, dict] = {}

    def wire_delay(net, ref):
        if net.name not in wire:
            wire[net.name] = elmore_delays(layout, net)
        return wire[net.name].get(ref, 0.0)

    loads: dict[str, float] = {}

    def load(net):
        if net.name not in loads:
            loads[net.name] = net_load(layout, net)
        return loads[net.name]

    cells = {n: i for n, i in layout.instances.items() if not i.master.is_filler and i.master.pins}
    graph = graphlib.TopologicalSorter()
    for name, inst in cells.items():
        graph.add(name)
        if inst.master.is_sequential:
            continue
        for p in inst.master.input_pins:
            net = in_net.get((name, p.name))
            d = layout.driver(net) if net is not None else None
            if d is not None and d[0] != IO and d[0] in cells and not cells[d[0]].master.is_sequential:
                graph.add(name, d[0])
    try:
        order = list(graph.static_order())
    except graphlib.CycleError as e:
        raise TimingError(f"combinational cycle: {' -> '.join(e.args[1])}") from None

    arr_out: dict[tuple[str, str], float] = {}

    def arrival_at(ref) -> float:
        net = in_net.get(ref)
        if net is None:
            return 0.0
        d = layout.driver(net)
        if d is None:
            return 0.0
        return arr_out.get(d, 0.0) + wire_delay(net, ref)

    for name in order:
        inst = cells[name]
        m = inst.master
        if m.is_sequential:
            t_in = 0.0
        else:
            t_in = max((arrival_at((name, p.name)) for p in m.input_pins if p.use != "clock"), default=0.0)
        for p in m.output_pins:
            net = out_net.get((name, p.name))
            cl = load(net) if net is not None else 0.0
            arr_out[(name, p.name)] = t_in + m.intrinsic_delay + m.drive_slope * cl
    slacks = {}
    for name in order:
        inst = cells[name]
        m = inst.master
        if m.is_sequential:
            for p in m.input_pins:
                if p.use != "clock" and (name, p.name) in in_net:
                    slacks[f"{name}/{p.name}"] = period - arrival_at((name, p.name))
        for p in m.output_pins:
            net = out_net.get((name, p.name))
            if net is None or not layout.sinks(net):
                slacks[f"{name}/{p.name}"] = period - arr_out[(name, p.name)]
    for io in sorted(layout.io_pins.values(), key=lambda p: p.name):
        if io.direction == "output" and io.net in layout.nets and layout.nets[io.net].kind != "clock":
            slacks[f"PIN/{io.name}"] = period - arrival_at((IO, io.name))
    if not slacks:
        return TimingResult(period, 0.0, {})
    vals = np.array(list(slacks.values()))
    return TimingResult(float(vals.min()), float(vals[vals < 0].sum()), slacks)


def timing_proxy(layout: Layout, cfg: ScoreConfig | None = None) -> tuple[float, float]:
    t = analyze_timing(layout, cfg)
    return t.wns, t.tns


# --- DRC-lite --------------------------------------------------------------

def _spacing_violations(layer, shapes: list[tuple[str, Rect]]) -> list[Violation]:
    if len(shapes) < 2:
        return []
    s = layer.min_spacing
    shapes = sorted(shapes, key=lambda t: (t[1].lo_x, t[1].lo_y, t[0]))
    arr = np.array([(r.lo_x, r.lo_y, r.hi_x, r.hi_y) for _, r in shapes], dtype=np.int64)
    owners = np.array([o for o, _ in shapes], dtype=object)
    n = len(shapes)
    j1 = np.searchsorted(arr[:, 0], arr[:, 2] + s, side="left")
    counts = np.maximum(j1 - np.arange(n) - 1, 0)
    ii = np.repeat(np.arange(n), counts)
    starts = np.cumsum(counts) - counts
    jj = ii + 1 + (np.arange(counts.sum()) - np.repeat(starts, counts))
    gx = np.maximum(arr[jj, 0] - arr[ii, 2], arr[ii, 0] - arr[jj, 2])
    gy = np.maximum(arr[jj, 1] - arr[ii, 3], arr[ii, 1] - arr[jj, 3])
    hit = (gx < s) & (gy < s) & (owners[ii] != owners[jj])
    out = []
    for i, j in zip(ii[hit].tolist(), jj[hit].tolist()):
        a, b = sorted((owners[i], owners[j]))
        ra, rb = shapes[i][1], shapes[j][1]
        box = Rect(min(ra.lo_x, rb.lo_x), min(ra.lo_y, rb.lo_y), max(ra.hi_x, rb.hi_x), max(ra.hi_y, rb.hi_y))
        out.append(Violation("spacing", (a, b), f"{layer.name}: {a} and {b} closer than {s}",
                             layer.name, box))
    return out


def drc_lite(layout: Layout) -> list[Violation]:
    tech = layout.tech
    out: list[Violation] = []
    for name in sorted(layout.nets):
        net = layout.nets[name]
        for seg in net.route:
            layer = tech.layer(seg.layer)
            if seg.width < layer.min_width:
                out.append(Violation("min_width", (name,), f"{seg.layer} width {seg.width}", seg.layer, seg.rect))
            if seg.width > layer.max_width:
                out.append(Violation("max_width", (name,), f"{seg.layer} width {seg.width}", seg.layer, seg.rect))
            if not seg.axis_aligned:
                out.append(Violation("off_track", (name,), "segment is not axis-aligned", seg.layer))
            elif not on_track(layout, seg):
                out.append(Violation("off_track", (name,), f"{seg.layer} segment off the routing grid",
                                     seg.layer, seg.rect))
        if net.routed and not net_connected(layout, net):
            out.append(Violation("dangling", (name,), "routed net is not a single connected component"))
    by_layer: dict[str, list] = {}
    for owner, layer, r in layout.iter_shapes():
        by_layer.setdefault(layer, []).append((owner, r))
    for layer in tech.layers:
        out += _spacing_violations(layer, by_layer.get(layer.name, []))
    out += check_legal_placement(layout)
    return out


def quality_report(layout: Layout, cfg: ScoreConfig | None = None) -> QualityReport:
    cfg = cfg or ScoreConfig()
    t = analyze_timing(layout, cfg)
    return QualityReport(cell_area(layout), power_proxy(layout, cfg), t.wns, t.tns, t.endpoints,
                         drc_lite(layout))
