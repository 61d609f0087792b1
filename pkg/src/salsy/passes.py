"""Security transformation passes, guards and the two-loop pipeline."""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .config import PASS_ORDER, PassConfig, ScoreConfig
from .gridroute import RouteError, RouteGrid, RouteRule, default_rule, insert_multicut_vias, reroute, \
    route_net, widen_net
from .layout import IO, AssetSet, Instance, Layout, Net, ShapeIndex, flip_x, instance_footprint, row_orient
from .quality import analyze_timing, drc_lite
from .scoring import RawMetrics, ScoreBundle, collect_raw, score
from .secmetrics import (BLOCKED, FILLER, FREE, asset_net_group, exposed_area, exploitable_runs,
                         find_exploitable_regions, site_states)

log = logging.getLogger(__name__)


@dataclass
class PassReport:
    name: str
    status: str = "noop"  # applied | noop | rolled_back | failed
    reason: str = ""
    changes: int = 0
    before: dict = field(default_factory=dict)
    after: dict = field(default_factory=dict)
    details: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    score: dict | None = None

    @property
    def success(self) -> bool:
        return self.status in ("applied", "noop")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("name", "status", "reason", "changes", "before", "after",
                                                "details", "warnings", "score")}


class Session:
    """Mutable state shared by the passes of one run."""

    def __init__(self, layout: Layout, cfg: PassConfig | None = None, assets: AssetSet | None = None,
                 score_cfg: ScoreConfig | None = None, baseline: RawMetrics | None = None):
        self.layout = layout
        self.cfg = cfg or PassConfig()
        self.assets = assets or AssetSet()
        self.score_cfg = score_cfg or ScoreConfig()
        self.baseline = baseline
        self.grid = RouteGrid.from_layout(layout, via_penalty=self.cfg.via_penalty,
                                          nonpref_penalty=self.cfg.nonpref_penalty)
        self._buf = 0
        self._cache: dict = {}

    # -- probes (cached until the layout is touched) -------------------------
    def touch(self) -> None:
        self._cache = {}

    def _cached(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    def wns(self) -> float:
        return self._cached("wns", lambda: analyze_timing(self.layout, self.score_cfg).wns)

    def drc_count(self) -> int:
        return self._cached("drc", lambda: len(drc_lite(self.layout)))

    def index(self) -> ShapeIndex:
        """Routing-layer shape index of the current state, built from the grid."""
        names = [l.name for l in self.grid.layers]
        return self._cached("index", lambda: ShapeIndex(
            (o, names[k], r) for o in sorted(self.grid.owners) for k, r in self.grid.owners[o]))

    def exposure(self) -> int:
        return self._cached("exposure", lambda: exposed_area(
            self.layout, self.assets, with_rects=False, index=self.index()).total)

    def net_exposure(self, name: str) -> int:
        return self._cached(("net", name), lambda: exposed_area(
            self.layout, AssetSet(frozenset(), frozenset({name})), with_rects=False, index=self.index()).total)

    def sts(self) -> int:
        return self._cached("sts", lambda: sum(
            r.site_count for r in find_exploitable_regions(self.layout, self.cfg.gap_threshold)))

    def probe(self) -> dict:
        return {"wns": self.wns(), "drc": self.drc_count(), "exposure": self.exposure(), "sts": self.sts()}

    # -- checkpoints -------------------------------------------------------
    def restore(self, cp) -> None:
        self.layout.restore(cp)
        self.grid.load(self.layout)
        self.touch()

    def instance_moved(self, name: str) -> None:
        """Bring the routing grid in step after an instance moved or flipped."""
        inst = self.layout.instances.get(name)
        for n in self.layout.nets_of(name):
            self.grid.sync_net(self.layout, self.layout.nets[n])
        if inst is not None:
            self.grid.refresh_pins(self.layout, [(name, p.name) for p in inst.master.pins])
        self.touch()

    def _scoped_checkpoint(self, insts, nets):
        layout = self.layout
        inst_state = {n: (i.x, i.y, i.orient) for n, i in layout.instances.items() if n in insts}
        net_state = {n: (list(x.pins), x.route, x.vias, x.rule, x.original, x.is_asset)
                     for n, x in layout.nets.items() if n in nets}
        return inst_state, net_state, set(layout.nets), set(layout.instances)

    def _scoped_restore(self, cp) -> None:
        layout = self.layout
        inst_state, net_state, net_names, inst_names = cp
        touched_nets = set(net_state) | (set(layout.nets) - net_names)
        gone = {(n, p.name) for n in set(layout.instances) - inst_names for p in layout.instances[n].master.pins}
        for n in set(layout.nets) - net_names:
            del layout.nets[n]
        for n in set(layout.instances) - inst_names:
            del layout.instances[n]
        self.grid.refresh_pins(layout, sorted(gone))
        for n, (x, y, o) in inst_state.items():
            i = layout.instances[n]
            i.x, i.y, i.orient = x, y, o
        for n, (pins, route, vias, rule, orig, asset) in net_state.items():
            x = layout.nets[n]
            x.pins, x.route, x.vias, x.rule, x.original, x.is_asset = pins, route, vias, rule, orig, asset
        refs = {(i, p.name) for i in inst_state for p in layout.instances[i].master.pins}
        for n in touched_nets:
            if n in layout.nets:
                self.grid.sync_net(layout, layout.nets[n])
                refs |= {r for r in layout.nets[n].pins if r[0] != IO}
            else:
                self.grid.remove_owner(n)
        self.grid.refresh_pins(layout, sorted(r for r in refs if r[0] in layout.instances))
        self.touch()

    def guarded_edit(self, edit, base_drc: int, extra=None, scope=None) -> bool:
        """Apply ``edit``; keep it only if it succeeds and the guards hold.

        ``scope`` = (instance names, net names) lets a failed edit be undone
        locally instead of restoring a full snapshot; the edit must not touch
        anything else except by creating new nets.
        """
        cp = self._scoped_checkpoint(*scope) if scope else self.layout.snapshot("edit")
        saved = dict(self._cache)
        try:
            ok = edit()
        except RouteError:
            ok = False
        self.touch()
        if ok and extra is not None and not extra():
            ok = False
        if ok and self.cfg.timing_guard and self.wns() < 0:
            ok = False
        if ok and self.cfg.drc_guard and self.drc_count() > base_drc:
            ok = False
        if not ok:
            if scope:
                self._scoped_restore(cp)
            else:
                self.restore(cp)
            self._cache = saved
        return ok

    # -- routing helpers ---------------------------------------------------
    def rule(self, net: Net) -> RouteRule:
        return net.rule or default_rule(self.layout, net)

    def reroute_nets(self, names) -> None:
        names = [n for n in names if n in self.layout.nets and len(self.layout.nets[n].pins) >= 2]
        self.touch()
        reroute(self.grid, self.layout, names, {n: self.rule(self.layout.nets[n]) for n in names})

    def new_name(self, prefix: str, pool) -> str:
        while True:
            self._buf += 1
            name = f"{prefix}{self._buf}"
            if name not in pool:
                return name


# --- guard wrapper -----------------------------------------------------------

_TARGET = {n: ("exposure" if k < 6 else "sts") for k, n in enumerate(PASS_ORDER)}


def as_session(target, cfg: PassConfig | None = None, **kw) -> Session:
    """Reuse a Session or wrap a bare layout in a fresh one."""
    if isinstance(target, Session):
        return target
    return Session(target, cfg, kw.get("assets"), kw.get("score_cfg"), kw.get("baseline"))


def run_guarded(name: str, session: Session, body) -> PassReport:
    """Run ``body(session, report)`` under a checkpoint; roll back on a guard breach."""
    rep = PassReport(name)
    layout = session.layout
    cp = layout.snapshot(name)
    session.touch()
    rep.before = session.probe()
    try:
        body(session, rep)
    except RouteError as e:
        session.restore(cp)
        rep.status, rep.reason = "rolled_back", f"routing failed: {e}"
        rep.after = dict(rep.before)
        return rep
    if rep.changes == 0:
        rep.after = dict(rep.before)
        rep.status = "noop"
        return rep
    session.touch()
    rep.after = session.probe()
    cfg = session.cfg
    key = _TARGET[name]
    cause = None
    if cfg.timing_guard and rep.after["wns"] < 0:
        cause = f"timing guard: wns {rep.after['wns']:.1f} ps"
    elif cfg.drc_guard and rep.after["drc"] > rep.before["drc"]:
        cause = f"drc guard: {rep.before['drc']} -> {rep.after['drc']} violations"
    elif rep.after[key] > rep.before[key]:
        cause = f"{key} increased: {rep.before[key]} -> {rep.after[key]}"
    if cause:
        session.restore(cp)
        rep.status, rep.reason = "rolled_back", cause
        rep.after = dict(rep.before)
    else:
        rep.status = "applied"
    return rep


# --- 1. NDR clock wires ----------------------------------------------------------

def _ndr_cts(s: Session, rep: PassReport):
    cfg = s.cfg
    if cfg.ndr_factor <= 1:
        return
    for name in sorted(s.layout.nets):
        net = s.layout.nets[name]
        if net.kind != "clock" or not net.route:
            continue
        res = widen_net(s.layout, net, cfg.ndr_factor, cfg.ndr_cap, s.grid)
        rep.changes += res.widened
        rep.warnings += sorted(set(res.warnings))
        if res.kept:
            rep.details.append(f"{name}: {len(res.kept)} segment(s) kept narrow by spacing")


def pass_ndr_cts(layout, cfg: PassConfig | None = None, **kw) -> PassReport:
    return run_guarded("ndr_cts", as_session(layout, cfg, **kw), _ndr_cts)


# --- 2. layer-targeted routing -------------------------------------------------

def ltr_rules(layout: Layout, cfg: PassConfig) -> dict[str, RouteRule]:
    tech = layout.tech
    names = {l.name for l in tech.routing_layers}
    asset_layers = tuple(l for l in cfg.asset_layers if l in names)
    other_layers = tuple(l for l in cfg.other_layers if l in names)
    if not asset_layers or not other_layers:
        raise RouteError("layer sets do not exist in this technology")
    asset_w = max(tech.layer(l).min_width for l in asset_layers)
    base = tech.layer("M2") if "M2" in names else tech.routing_layers[0]
    other_w = min(base.default_width * cfg.other_width_mult, *(tech.layer(l).max_width for l in other_layers))
    rules = {}
    for n, net in layout.nets.items():
        if net.kind == "clock":
            continue
        if net.is_asset:
            rules[n] = RouteRule(asset_layers, asset_w, priority=1, selector=n)
        else:
            rules[n] = RouteRule(other_layers, other_w, priority=0, selector=n)
    return rules


def _ltr(s: Session, rep: PassReport):
    rules = ltr_rules(s.layout, s.cfg)
    before = {n: (s.layout.nets[n].route, s.layout.nets[n].vias) for n in rules}
    results = reroute(s.grid, s.layout, list(rules), rules)
    fb = sorted(n for n, r in results.items() if r.fallback_used)
    if fb:
        rep.details.append(f"default-rule fallback on {len(fb)} net(s): {', '.join(fb)}")
    rep.changes = sum(1 for n in rules if (s.layout.nets[n].route, s.layout.nets[n].vias) != before[n])


def pass_layer_targeted_routing(layout, cfg: PassConfig | None = None, **kw) -> PassReport:
    return run_guarded("layer_targeted_routing", as_session(layout, cfg, **kw), _ltr)


# --- 3. multi-cut vias -----------------------------------------------------------

def _multicut(s: Session, rep: PassReport):
    # asset vias would only add exposed asset metal; enlarge the covering ones
    names = [n for n, net in s.layout.nets.items() if not net.is_asset]
    replaced, skipped = insert_multicut_vias(s.layout, s.grid, nets=names)
    rep.changes = replaced
    if skipped:
        rep.details.append(f"{skipped} via(s) could not be enlarged")


def pass_multicut_vias(layout, cfg: PassConfig | None = None, **kw) -> PassReport:
    return run_guarded("multicut_vias", as_session(layout, cfg, **kw), _multicut)


# --- placement helpers -------------------------------------------------------------

def _row_index(layout: Layout, y: int) -> int | None:
    for k, r in enumerate(layout.rows):
        if r.y == y:
            return k
    return None


def occupancy(layout: Layout, skip=()) -> list[np.ndarray]:
    """Per-row boolean site occupancy by any placed instance."""
    out = [np.zeros(r.site_count, dtype=bool) for r in layout.rows]
    for inst in layout.instances.values():
        if not inst.placed or inst.name in skip:
            continue
        k = _row_index(layout, inst.y)
        if k is None:
            continue
        row = layout.rows[k]
        lo = (inst.x - row.x) // row.site_width
        out[k][lo:lo + inst.master.width // row.site_width] = True
    return out


def nearest_free_slot(layout: Layout, width_sites: int, x: int, y: int, radius_sites: int,
                      skip=()) -> tuple[int, int] | None:
    """(row index, site) of the closest free span to (x, y); ties -> lowest site, lowest row."""
    occ = occupancy(layout, skip)
    best = None
    for k, row in enumerate(layout.rows):
        cy = row.y + row.height // 2
        free = ~occ[k]
        n = row.site_count - width_sites + 1
        if n <= 0:
            continue
        win = np.lib.stride_tricks.sliding_window_view(free, width_sites).all(axis=1)
        for site in np.flatnonzero(win):
            cx = row.site_x(int(site)) + width_sites * row.site_width // 2
            d = abs(cx - x) + abs(cy - y)
            if d > radius_sites * row.site_width:
                continue
            key = (d, int(site), k)
            if best is None or key < best:
                best = key
    return None if best is None else (best[2], best[1])


def _move(layout: Layout, inst: Instance, k: int, site: int):
    row = layout.rows[k]
    inst.x, inst.y = row.site_x(site), row.y
    inst.orient = row_orient(inst.orient, row.flipped)


# --- 4. edge cell placement ------------------------------------------------------

def _edge(s: Session, rep: PassReport):
    layout, cfg = s.layout, s.cfg
    base_drc = s.drc_count()
    for name in sorted(layout.nets):
        net = layout.nets[name]
        if not net.is_asset:
            continue
        ios = [p for i, p in net.pins if i == IO]
        if not ios:
            continue
        io = layout.io_pins[ios[0]]
        px, py = io.rect.center
        for inst_name in sorted({i for i, _ in net.pins if i != IO}):
            inst = layout.instances[inst_name]
            if inst.fixed:
                rep.details.append(f"{inst_name}: fixed")
                continue
            slot = nearest_free_slot(layout, inst.master.width // layout.tech.site.width, px, py,
                                     cfg.edge_radius, skip={inst_name})
            if slot is None:
                rep.details.append(f"{inst_name}: no legal site within {cfg.edge_radius} sites")
                continue
            cur = instance_footprint(inst).center
            new_x = layout.rows[slot[0]].site_x(slot[1]) + inst.master.width // 2
            new_y = layout.rows[slot[0]].y + inst.master.height // 2
            if abs(new_x - px) + abs(new_y - py) >= abs(cur[0] - px) + abs(cur[1] - py):
                continue
            wl0 = net.wirelength

            def edit(inst=inst, slot=slot):
                _move(layout, inst, *slot)
                s.instance_moved(inst.name)
                s.reroute_nets(layout.nets_of(inst.name))
                return layout.nets[name].wirelength < wl0

            if s.guarded_edit(edit, base_drc, scope=({inst.name}, set(layout.nets_of(inst.name)))):
                rep.changes += 1
                rep.details.append(f"{inst_name} moved next to {io.name}")


def pass_edge_cell_placement(layout, cfg: PassConfig | None = None, **kw) -> PassReport:
    return run_guarded("edge_cell_placement", as_session(layout, cfg, **kw), _edge)


# --- buffer splicing ---------------------------------------------------------------

def _route_points(layout: Layout, net: Net, src, dst) -> list[tuple[int, int]]:
    """Polyline along the routed wires from pin ``src`` to pin ``dst`` (empty if not found)."""
    tech = layout.tech
    pts: dict[str, set] = {}
    for s in net.route:
        pts.setdefault(s.layer, set()).update({(s.x0, s.y0), (s.x1, s.y1)})
    for v in net.vias:
        d = tech.vias[v.via]
        pts.setdefault(d.bottom, set()).add((v.x, v.y))
        pts.setdefault(d.top, set()).add((v.x, v.y))
    adj: dict = {}

    def link(a, b):
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)

    for s in net.route:
        lx, hx = sorted((s.x0, s.x1))
        ly, hy = sorted((s.y0, s.y1))
        on = sorted(p for p in pts[s.layer] if lx <= p[0] <= hx and ly <= p[1] <= hy)
        for p, q in zip(on, on[1:]):
            link((s.layer, *p), (s.layer, *q))
    for v in net.vias:
        d = tech.vias[v.via]
        link((d.bottom, v.x, v.y), (d.top, v.x, v.y))
    for ref in (src, dst):
        for layer, r in layout.pin_shapes(ref):
            for p in pts.get(layer, ()):
                if r.contains_point(*p):
                    link(("pin", ref), (layer, *p))
    a, b = ("pin", src), ("pin", dst)
    if a not in adj or b not in adj:
        return []
    prev = {a: None}
    dq = deque([a])
    while dq:
        u = dq.popleft()
        if u == b:
            break
        for w in adj[u]:
            if w not in prev:
                prev[w] = u
                dq.append(w)
    if b not in prev:
        return []
    path = []
    u = prev[b]
    while u is not None and u != a:
        path.append((u[1], u[2]))
        u = prev[u]
    return path[::-1]


def arc_midpoint(layout: Layout, net: Net) -> tuple[int, int]:
    """Midpoint by arc length of the routed path from the driver to the farthest sink."""
    driver = layout.driver(net) or net.pins[0]
    best = []
    for ref in layout.sinks(net):
        pts = _route_points(layout, net, driver, ref)
        if len(pts) > len(best) or (pts and sum(abs(p[0] - q[0]) + abs(p[1] - q[1]) for p, q in zip(pts, pts[1:]))
                                    > sum(abs(p[0] - q[0]) + abs(p[1] - q[1]) for p, q in zip(best, best[1:]))):
            best = pts
    if len(best) < 2:
        xs = [layout.pin_shapes(r)[0][1].center for r in net.pins]
        return sum(p[0] for p in xs) // len(xs), sum(p[1] for p in xs) // len(xs)
    steps = [abs(p[0] - q[0]) + abs(p[1] - q[1]) for p, q in zip(best, best[1:])]
    half = sum(steps) / 2
    acc = 0
    for (p, q), d in zip(zip(best, best[1:]), steps):
        if acc + d >= half and d:
            t = (half - acc) / d
            return int(p[0] + t * (q[0] - p[0])), int(p[1] + t * (q[1] - p[1]))
        acc += d
    return best[-1]


def add_buffer(s: Session, k: int, site: int, prefix: str = "salsy_buf") -> Instance:
    layout = s.layout
    master = layout.tech.masters[s.cfg.buffer_master]
    row = layout.rows[k]
    name = s.new_name(prefix, layout.instances)
    inst = Instance(name, master, row.site_x(site), row.y, row.orient)
    # drop fillers under the new footprint
    box = instance_footprint(inst)
    for other in sorted(layout.instances.values(), key=lambda i: i.name):
        if other.placed and other.master.is_filler and instance_footprint(other).intersects(box):
            del layout.instances[other.name]
    layout.instances[name] = inst
    s.touch()
    return inst


def splice(s: Session, net: Net, buf: Instance, sinks) -> Net:
    """Move ``sinks`` of ``net`` behind ``buf``; returns the new downstream net."""
    layout = s.layout
    m = buf.master
    a = m.input_pins[0].name
    z = m.output_pins[0].name
    new = Net(s.new_name(f"{net.name}_b", layout.nets), net.kind, [(buf.name, z)] + list(sinks),
              original=net.name, rule=net.rule, is_asset=net.is_asset)
    net.pins = [p for p in net.pins if p not in sinks] + [(buf.name, a)]
    layout.nets[new.name] = new
    _resync(s, [net.name, new.name], [(buf.name, a), (buf.name, z)] + list(sinks))
    return new


def _resync(s: Session, nets, refs) -> None:
    for n in nets:
        if n in s.layout.nets:
            s.grid.sync_net(s.layout, s.layout.nets[n])
        else:
            s.grid.remove_owner(n)
    s.grid.refresh_pins(s.layout, [r for r in refs if r[0] != IO])
    s.touch()


# --- 5. intermediate buffering -----------------------------------------------------

def _intermediate(s: Session, rep: PassReport):
    layout, cfg = s.layout, s.cfg
    base_drc = s.drc_count()
    width = layout.tech.masters[cfg.buffer_master].width // layout.tech.site.width
    inserted = 0
    for name in sorted(layout.nets):
        if inserted >= cfg.max_buffers:
            break
        net = layout.nets.get(name)
        if net is None or not net.is_asset or net.kind == "clock" or net.wirelength <= cfg.ib_length:
            continue
        if layout.driver(net) is None or not layout.sinks(net):
            continue
        mx, my = arc_midpoint(layout, net)
        slot = nearest_free_slot(layout, width, mx, my, cfg.edge_radius)
        if slot is None:
            rep.details.append(f"{name}: no free site near the midpoint")
            continue
        e0 = s.exposure()

        def edit(net=net, slot=slot):
            buf = add_buffer(s, *slot)
            new = splice(s, net, buf, layout.sinks(net))
            s.grid.load(layout)
            s.reroute_nets([net.name, new.name])
            return True

        if s.guarded_edit(edit, base_drc, extra=lambda e0=e0: s.exposure() <= e0):
            inserted += 1
            rep.changes += 1
            rep.details.append(f"{name}: buffered")
        else:
            rep.details.append(f"{name}: insertion rolled back")


def pass_intermediate_buffering(layout, cfg: PassConfig | None = None, **kw) -> PassReport:
    return run_guarded("intermediate_buffering", as_session(layout, cfg, **kw), _intermediate)


# --- 6. cell flipping ------------------------------------------------------------------

def _flipping(s: Session, rep: PassReport):
    layout, cfg = s.layout, s.cfg
    if cfg.flip_k <= 0:
        return
    base_drc = s.drc_count()
    for _ in range(8):  # repeat until a round keeps no flip
        before = rep.changes
        _flip_round(s, rep, base_drc)
        if rep.changes == before:
            break


def _flip_round(s: Session, rep: PassReport, base_drc: int):
    layout, cfg = s.layout, s.cfg
    ex = exposed_area(layout, s.assets, with_rects=False, index=s.index())
    for a in ex.worst_nets(cfg.flip_k):
        if a.exposed_area == 0:
            continue
        cells = sorted({i for n in asset_net_group(layout, a.name) for i, _ in layout.nets[n].pins if i != IO})
        for inst_name in cells:
            inst = layout.instances[inst_name]
            if inst.fixed:
                continue
            cur = s.net_exposure(a.name)
            total = s.exposure()

            def edit(inst=inst):
                inst.orient = flip_x(inst.orient)
                s.instance_moved(inst.name)
                s.reroute_nets(layout.nets_of(inst.name))
                return True

            def better(name=a.name, cur=cur, total=total):
                return s.net_exposure(name) < cur and s.exposure() <= total

            if s.guarded_edit(edit, base_drc, better, scope=({inst.name}, set(layout.nets_of(inst.name)))):
                rep.changes += 1
                rep.details.append(f"{inst_name} flipped for {a.name}")
                break


def pass_cell_flipping(layout, cfg: PassConfig | None = None, **kw) -> PassReport:
    return run_guarded("cell_flipping", as_session(layout, cfg, **kw), _flipping)


# --- 7. location-based buffering -------------------------------------------------

def _placeable(states: np.ndarray, p: int, w: int) -> bool:
    seg = states[p:p + w]
    return len(seg) == w and bool(np.all((seg == FREE) | (seg == FILLER)))


def plan_buffers(states: np.ndarray, start: int, end: int, width: int, threshold: int) -> list[int] | None:
    """Buffer positions splitting [start, end) into runs shorter than ``threshold``."""
    out = []
    cur = start
    while end - cur >= threshold:
        hi = min(cur + threshold - 1, end - width)
        for p in range(hi, cur - 1, -1):
            if _placeable(states, p, width):
                out.append(p)
                cur = p + width
                break
        else:
            return None
    return out


def _candidates(s: Session, buf: Instance) -> list[tuple[int, str]]:
    layout, cfg = s.layout, s.cfg
    bx, by = instance_footprint(buf).center
    out = []
    for name, net in layout.nets.items():
        if net.kind == "clock" or net.is_asset or layout.driver(net) is None or not layout.sinks(net):
            continue
        if any(i == buf.name for i, _ in net.pins):
            continue
        d = min(abs(r.center[0] - bx) + abs(r.center[1] - by)
                for ref in net.pins for _, r in layout.pin_shapes(ref))
        if d <= cfg.lbb_halo:
            out.append((d, name))
    out.sort()
    return out[:cfg.lbb_candidates]


def _nearest_sink(layout: Layout, net: Net, x: int, y: int):
    def dist(ref):
        c = layout.pin_shapes(ref)[0][1].center
        return abs(c[0] - x) + abs(c[1] - y), ref
    return min(layout.sinks(net), key=dist)


def _connect_buffer(s: Session, buf: Instance, base_drc: int) -> str | None:
    """Splice ``buf`` into the nearby net with the smallest timing impact.

    Candidates are trial-routed with a local undo; the DRC guard is checked
    on the ranked winners only.
    """
    layout = s.layout
    bx, by = instance_footprint(buf).center
    ranked = []
    for _, name in _candidates(s, buf):
        net = layout.nets[name]
        sink = _nearest_sink(layout, net, bx, by)
        saved = (list(net.pins), net.route, net.vias, net.rule)
        wl0 = net.wirelength
        new = splice(s, net, layout.instances[buf.name], [sink])
        try:
            s.reroute_nets([name, new.name])
            wns = s.wns()
            if not s.cfg.timing_guard or wns >= 0:
                ranked.append((-wns, net.wirelength + new.wirelength - wl0, name, sink))
        except RouteError:
            pass
        del layout.nets[new.name]
        net.pins, net.route, net.vias, net.rule = saved
        _resync(s, [name, new.name], [(buf.name, p.name) for p in buf.master.pins] + [sink])
    for _, _, name, sink in sorted(ranked):
        net = layout.nets[name]

        def edit(net=net, sink=sink):
            new = splice(s, net, layout.instances[buf.name], [sink])
            s.reroute_nets([net.name, new.name])
            return True

        if s.guarded_edit(edit, base_drc):
            return name
    return None


def _lbb(s: Session, rep: PassReport):
    layout, cfg = s.layout, s.cfg
    T = cfg.gap_threshold
    width = layout.tech.masters[cfg.buffer_master].width // layout.tech.site.width
    base_drc = s.drc_count()
    budget = cfg.max_buffers
    for region in find_exploitable_regions(layout, T):
        states = site_states(layout)[region.row]
        plan = plan_buffers(states, region.start, region.end, width, T)
        if plan is None:
            rep.details.append(f"row {region.row} [{region.start},{region.end}): no placeable sites")
            continue
        if len(plan) > budget:
            rep.details.append(f"row {region.row} [{region.start},{region.end}): buffer budget exhausted")
            continue
        cp = layout.snapshot("region")
        done = True
        for p in plan:
            buf = add_buffer(s, region.row, p)
            s.grid.load(layout)
            if _connect_buffer(s, buf, base_drc) is None:
                done = False
                break
        if not done:
            s.restore(cp)
            rep.details.append(f"row {region.row} [{region.start},{region.end}): no splice meets the guards")
            continue
        budget -= len(plan)
        rep.changes += len(plan)
    left = find_exploitable_regions(layout, T)
    for r in left:
        rep.details.append(f"residual region row {r.row} [{r.start},{r.end})")


def pass_location_based_buffering(layout, cfg: PassConfig | None = None, **kw) -> PassReport:
    return run_guarded("location_based_buffering", as_session(layout, cfg, **kw), _lbb)


# --- 8. final refinement -----------------------------------------------------------

def _flank(layout: Layout, k: int, site: int) -> Instance | None:
    row = layout.rows[k]
    x = row.site_x(site)
    for inst in layout.instances.values():
        if inst.placed and inst.y == row.y and inst.x <= x < inst.x + inst.master.width:
            return inst
    return None


def _row_exploitable(mask: np.ndarray, threshold: int) -> int:
    return sum(e - b for b, e in exploitable_runs(mask, threshold))


def _shift_gain(layout: Layout, k: int, inst: Instance, d: int, threshold: int) -> int | None:
    """Exploitable sites left in row ``k`` after shifting ``inst`` by ``d`` sites.

    None if the shift is illegal or does not shrink the row's exploitable sites.
    """
    row = layout.rows[k]
    states = site_states(layout)[k]
    lo = (inst.x - row.x) // row.site_width
    w = inst.master.width // row.site_width
    new_lo = lo + d
    if new_lo < 0 or new_lo + w > row.site_count:
        return None
    occ = occupancy(layout, skip={inst.name})[k]
    if occ[new_lo:new_lo + w].any():
        return None
    trial = states.copy()
    trial[lo:lo + w] = FREE
    trial[new_lo:new_lo + w] = BLOCKED
    after = _row_exploitable(trial != BLOCKED, threshold)
    return after if after < _row_exploitable(states != BLOCKED, threshold) else None


def _refine(s: Session, rep: PassReport):
    layout, cfg = s.layout, s.cfg
    T = cfg.gap_threshold
    base_drc = s.drc_count()
    home = {n: i.x for n, i in layout.instances.items()}
    tried = set()
    while True:
        connected = layout.connected_instances()
        options = []
        for region in find_exploitable_regions(layout, T):
            row = layout.rows[region.row]
            flanks = []
            if region.start > 0:
                flanks.append((_flank(layout, region.row, region.start - 1), 1))
            if region.end < row.site_count:
                flanks.append((_flank(layout, region.row, region.end), -1))
            for inst, sign in flanks:
                if inst is None or inst.fixed or inst.master.is_filler or inst.name not in connected:
                    continue
                for step in range(1, cfg.max_shift + 1):
                    d = sign * step
                    moved = (inst.x + d * row.site_width - home[inst.name]) // row.site_width
                    if abs(moved) > cfg.max_shift or (inst.name, inst.x, d) in tried:
                        continue
                    left = _shift_gain(layout, region.row, inst, d, T)
                    if left is not None:
                        options.append((left, step, inst.name, d, region.row))
        if not options:
            break
        options.sort()
        _, _, name, d, k = options[0]
        tried.add((name, layout.instances[name].x, d))
        e0 = s.exposure()

        def edit(name=name, d=d, k=k):
            layout.instances[name].x += d * layout.rows[k].site_width
            s.instance_moved(name)
            s.reroute_nets(layout.nets_of(name))
            return True

        if s.guarded_edit(edit, base_drc, extra=lambda e0=e0: s.exposure() <= e0,
                          scope=({name}, set(layout.nets_of(name)))):
            rep.changes += 1
            rep.details.append(f"{name} shifted {d:+d} site(s)")
    for r in find_exploitable_regions(layout, T):
        rep.details.append(f"residual region row {r.row} [{r.start},{r.end})")


def pass_final_refinement(layout, cfg: PassConfig | None = None, **kw) -> PassReport:
    return run_guarded("final_refinement", as_session(layout, cfg, **kw), _refine)


PASSES = {
    "ndr_cts": pass_ndr_cts,
    "layer_targeted_routing": pass_layer_targeted_routing,
    "multicut_vias": pass_multicut_vias,
    "edge_cell_placement": pass_edge_cell_placement,
    "intermediate_buffering": pass_intermediate_buffering,
    "cell_flipping": pass_cell_flipping,
    "location_based_buffering": pass_location_based_buffering,
    "final_refinement": pass_final_refinement,
}


# --- pipeline ----------------------------------------------------------------------

@dataclass
class PipelineResult:
    layout: Layout
    bundle: ScoreBundle
    trail: list[dict]
    reports: list[PassReport]
    raw: RawMetrics

    @property
    def applied(self) -> list[str]:
        return [r.name for r in self.reports if r.status == "applied"]


def run_pipeline(layout: Layout, assets: AssetSet, baseline: RawMetrics | None = None,
                 score_cfg: ScoreConfig | None = None, cfg: PassConfig | None = None) -> PipelineResult:
    """Run the enabled passes in flow order with the FSP/FI and TI satisfaction loops.

    Passes 1-5 run first; while the FSP/FI target is unmet, intermediate
    buffering is re-entered. Passes 6-8 follow; while the TI target is unmet,
    the two placement passes are re-entered. ``layout`` is modified in place.
    """
    score_cfg = score_cfg or ScoreConfig()
    cfg = cfg or PassConfig()
    if baseline is None:
        baseline = collect_raw(layout, assets, score_cfg)
    session = Session(layout, cfg, assets, score_cfg, baseline)
    trail: list[dict] = []
    reports: list[PassReport] = []

    def current():
        raw = collect_raw(layout, assets, score_cfg)
        _, bundle = score(raw, baseline, score_cfg)
        return raw, bundle

    raw, bundle = current()
    trail.append({"stage": "input", "status": "-", **bundle.to_dict()})

    def fsp_ok():
        return bundle.fsp_fi <= cfg.fsp_target

    def ti_ok():
        return bundle.ti <= cfg.ti_target

    def run(name):
        nonlocal raw, bundle
        if name not in cfg.passes:
            return
        cp = layout.snapshot(name)
        rep = PASSES[name](session)
        if rep.status == "applied":
            new_raw, new_bundle = current()
            if cfg.score_guard and new_bundle.overall > bundle.overall + 1e-12:
                session.restore(cp)
                rep.status = "rolled_back"
                rep.reason = f"score guard: overall {bundle.overall:.4f} -> {new_bundle.overall:.4f}"
                rep.after = dict(rep.before)
            else:
                raw, bundle = new_raw, new_bundle
        rep.score = bundle.to_dict()
        reports.append(rep)
        trail.append({"stage": name, "status": rep.status, **bundle.to_dict()})
        log.info("%s: %s %s", name, rep.status, rep.reason)

    if fsp_ok() and ti_ok():
        return PipelineResult(layout, bundle, trail, reports, raw)
    for name in PASS_ORDER[:5]:
        run(name)
    rounds = 1
    while not fsp_ok() and rounds < cfg.fsp_loop_limit:
        run(PASS_ORDER[4])
        rounds += 1
    for name in PASS_ORDER[5:]:
        run(name)
    rounds = 1
    while not ti_ok() and rounds < cfg.ti_loop_limit:
        for name in PASS_ORDER[6:]:
            run(name)
        rounds += 1
    return PipelineResult(layout, bundle, trail, reports, raw)
