"""Track-lattice maze router with per-net rules, fallback and via upgrades.

Nodes sit on the routing-track intersections of every layer. A node is unusable
for a net of width ``w`` when it lies strictly inside another owner's shape
inflated by ``w/2 + spacing``; with a uniform pitch that is enough to keep
every wire and via enclosure the router emits clear of other nets.
"""

from __future__ import annotations

import heapq
import logging
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage, sparse
from scipy.sparse import csgraph

from .geometry import Rect
from .layout import IO, Layout, Net, ShapeIndex, ViaInstance, WireSegment

log = logging.getLogger(__name__)


class RouteError(RuntimeError):
    pass


@dataclass
class RouteRule:
    preferred_layers: tuple[str, ...]
    width: int | None = None  # None: each layer's default width
    via_cut_count: int = 1
    priority: int = 0
    selector: str = ""

    def validate(self, tech):
        if not self.preferred_layers:
            raise ValueError("rule needs at least one preferred layer")
        for name in self.preferred_layers:
            layer = tech.layer(name)
            if not layer.is_routing:
                raise ValueError(f"{name} is not a routing layer")
            if self.width is not None and not (layer.min_width <= self.width <= layer.max_width):
                raise ValueError(f"width {self.width} outside the limits of {name}")
        if self.via_cut_count < 1:
            raise ValueError("via_cut_count must be >= 1")


@dataclass
class RouteResult:
    segments: list[WireSegment] = field(default_factory=list)
    vias: list[ViaInstance] = field(default_factory=list)
    fallback_used: bool = False
    cost: int = 0


def default_rule(layout: Layout, net: Net) -> RouteRule:
    names = [l.name for l in layout.tech.routing_layers]
    want = ("M4", "M5", "M6") if net.kind == "clock" else ("M2", "M3", "M4")
    pref = tuple(n for n in want if n in names) or tuple(names[1:] or names)
    return RouteRule(pref, selector=net.name)


class RouteGrid:
    def __init__(self, layout: Layout, via_penalty: int = 2, nonpref_penalty: int = 10,
                 wrongway_penalty: int = 4, access_penalty: int = 6):
        tech = layout.tech
        self.tech = tech
        self.layers = tech.routing_layers
        pitches = {(l.pitch, l.offset) for l in self.layers}
        if len(pitches) != 1:
            raise RouteError("router needs one pitch and offset shared by all routing layers")
        pitch, offset = pitches.pop()
        die = layout.die
        self.pitch = pitch
        self.xs = np.arange(die.lo_x + offset, die.hi_x, pitch, dtype=np.int64)
        self.ys = np.arange(die.lo_y + offset, die.hi_y, pitch, dtype=np.int64)
        self._xl, self._yl = self.xs.tolist(), self.ys.tolist()
        self.nl, self.nx, self.ny = len(self.layers), len(self.xs), len(self.ys)
        self.lindex = {l.name: k for k, l in enumerate(self.layers)}
        self.via_penalty = via_penalty
        self.nonpref_penalty = nonpref_penalty
        self.wrongway_penalty = wrongway_penalty
        self.access_penalty = access_penalty
        self.pin_owner: dict[tuple[str, str], str] = {}
        self.pin_nodes: dict[tuple[str, str], list[int]] = {}
        self.owners: dict[str, list[tuple[int, Rect]]] = {}
        self.counts: dict[int, np.ndarray] = {}

    @classmethod
    def from_layout(cls, layout: Layout, **kw) -> "RouteGrid":
        grid = cls(layout, **kw)
        grid.load(layout)
        return grid

    def load(self, layout: Layout):
        self.owners = {}
        self.counts = {}
        self.pin_owner = {}
        self.pin_nodes = {}
        for owner, layer, r in layout.iter_shapes():
            k = self.lindex.get(layer)
            if k is not None:
                self.owners.setdefault(owner, []).append((k, r))
        index = layout.pin_index()
        for inst in layout.instances.values():
            if not inst.placed:
                continue
            for pin, layer, r in layout.instance_pin_shapes(inst):
                ref = (inst.name, pin)
                self.pin_owner[ref] = index.get(ref, f"~{inst.name}/{pin}")
                self.pin_nodes.setdefault(ref, []).extend(self.nodes_in(layer, r))

    def refresh_pins(self, layout: Layout, refs) -> None:
        """Re-derive ownership of instance pins after their nets changed.

        Net shapes themselves are updated by ``sync_net``; this keeps the
        private owners of unconnected pins and the access map in step.
        """
        index = layout.pin_index()
        for ref in refs:
            inst = layout.instances.get(ref[0])
            private = f"~{ref[0]}/{ref[1]}"
            owner = index.get(ref, private)
            self.pin_owner[ref] = owner
            mine = [] if inst is None or not inst.placed else \
                [(layer, r) for p, layer, r in layout.instance_pin_shapes(inst) if p == ref[1]]
            self.pin_nodes[ref] = [n for layer, r in mine for n in self.nodes_in(layer, r)]
            if not self.pin_nodes[ref]:
                del self.pin_nodes[ref]
                self.pin_owner.pop(ref, None)
            self.set_owner(private, mine if owner == private else [])

    def access_mask(self, owner: str) -> np.ndarray:
        """(x, y) positions sitting on pins of other owners."""
        m = np.zeros((self.nx, self.ny), dtype=bool)
        plane = self.nx * self.ny
        for ref, nodes in self.pin_nodes.items():
            if self.pin_owner.get(ref) == owner:
                continue
            for n in nodes:
                i, j = divmod(n % plane, self.ny)
                m[i, j] = True
        return m

    # -- occupancy ---------------------------------------------------------
    def _window(self, k: int, r: Rect, width: int):
        m = width // 2 + self.layers[k].min_spacing
        xs, ys = self._xl, self._yl
        i0 = bisect_right(xs, r.lo_x - m)
        i1 = bisect_left(xs, r.hi_x + m)
        j0 = bisect_right(ys, r.lo_y - m)
        j1 = bisect_left(ys, r.hi_y + m)
        return slice(i0, i1), slice(j0, j1)

    def _stamp(self, arr: np.ndarray, width: int, shapes, sign: int):
        for k, r in shapes:
            si, sj = self._window(k, r, width)
            arr[k, si, sj] += sign

    def count_array(self, width: int) -> np.ndarray:
        arr = self.counts.get(width)
        if arr is None:
            arr = np.zeros((self.nl, self.nx, self.ny), dtype=np.int32)
            for shapes in self.owners.values():
                self._stamp(arr, width, shapes, 1)
            self.counts[width] = arr
        return arr

    def set_owner(self, owner: str, shapes) -> None:
        """Replace every shape of ``owner`` (shapes are (layer name, Rect))."""
        new = [(self.lindex[l], r) for l, r in shapes if l in self.lindex]
        old = self.owners.pop(owner, [])
        for w, arr in self.counts.items():
            self._stamp(arr, w, old, -1)
            self._stamp(arr, w, new, 1)
        if new:
            self.owners[owner] = new

    def sync_net(self, layout: Layout, net: Net) -> None:
        self.set_owner(net.name, layout.net_metal(net, with_pins=True))

    def remove_owner(self, owner: str) -> None:
        self.set_owner(owner, [])

    def blocked(self, owner: str, widths: list[int]) -> np.ndarray:
        """Boolean (layer, x, y) mask of nodes ``owner`` may not use."""
        out = np.zeros((self.nl, self.nx, self.ny), dtype=bool)
        own = self.owners.get(owner, [])
        for k, w in enumerate(widths):
            mine = np.zeros((self.nx, self.ny), dtype=np.int32)
            for kk, r in own:
                if kk == k:
                    si, sj = self._window(k, r, w)
                    mine[si, sj] += 1
            out[k] = (self.count_array(w)[k] - mine) > 0
        return out

    def consistent_with(self, layout: Layout) -> bool:
        other = RouteGrid.from_layout(layout)
        for w, arr in self.counts.items():
            if not np.array_equal(arr, other.count_array(w)):
                return False
        return True

    # -- node helpers ------------------------------------------------------
    def node(self, k: int, i: int, j: int) -> int:
        return (k * self.nx + i) * self.ny + j

    def unpack(self, n: int) -> tuple[int, int, int]:
        k, rest = divmod(n, self.nx * self.ny)
        i, j = divmod(rest, self.ny)
        return k, i, j

    def nodes_in(self, layer: str, r: Rect) -> list[int]:
        k = self.lindex.get(layer)
        if k is None:
            return []
        i0, i1 = bisect_left(self._xl, r.lo_x), bisect_right(self._xl, r.hi_x)
        j0, j1 = bisect_left(self._yl, r.lo_y), bisect_right(self._yl, r.hi_y)
        return [self.node(k, i, j) for i in range(i0, i1) for j in range(j0, j1)]

    # -- search ------------------------------------------------------------
    def components(self, blocked: np.ndarray, preferred: set[int], constrained: bool,
                   via_top: int | None = None) -> np.ndarray:
        """Connected-component label of every node under the move rules (-1 if blocked)."""
        free = ~blocked
        labels = np.full(blocked.shape, -1, dtype=np.int64)
        base = 0
        for k in range(self.nl):
            if constrained and k not in preferred:
                idx = np.flatnonzero(free[k].ravel())
                lab = np.full(self.nx * self.ny, -1, dtype=np.int64)
                lab[idx] = base + np.arange(len(idx))
                labels[k] = lab.reshape(self.nx, self.ny)
                base += len(idx)
            else:
                lab, n = ndimage.label(free[k])
                labels[k] = np.where(lab > 0, lab - 1 + base, -1)
                base += n
        top = self.nl - 1 if via_top is None else via_top
        a, b = [], []
        for k in range(min(top, self.nl - 1)):
            both = free[k] & free[k + 1]
            a.append(labels[k][both])
            b.append(labels[k + 1][both])
        if base == 0:
            return labels
        a = np.concatenate(a) if a else np.zeros(0, dtype=np.int64)
        b = np.concatenate(b) if b else np.zeros(0, dtype=np.int64)
        graph = sparse.coo_matrix((np.ones(len(a), dtype=np.int8), (a, b)), shape=(base, base))
        _, comp = csgraph.connected_components(graph, directed=False)
        return np.where(labels >= 0, comp[np.maximum(labels, 0)], -1)

    def search(self, sources, targets, blocked, preferred: set[int], constrained: bool,
               via_top: int | None = None, access: np.ndarray | None = None):
        """A* from any source node to any target node; returns (cost, path) or None.

        Steps along a layer's preferred direction cost 1, wrong-way steps add
        ``wrongway_penalty``; steps on non-preferred layers add
        ``nonpref_penalty`` (or are forbidden when ``constrained``). Entering a
        node above the first routing layer that sits over another net's pin
        adds ``access_penalty``.
        """
        nx, ny, nl = self.nx, self.ny, self.nl
        plane = nx * ny
        blk = blocked.ravel().tolist()
        acc = access.ravel().tolist() if access is not None and nl > 1 and self.access_penalty else None
        ww = self.wrongway_penalty
        targets = set(targets)
        tk, ti, tj = zip(*(self.unpack(t) for t in targets))
        kmin, kmax, imin, imax, jmin, jmax = min(tk), max(tk), min(ti), max(ti), min(tj), max(tj)
        vp = self.via_penalty
        top = nl - 1 if via_top is None else via_top
        horiz = [l.horizontal for l in self.layers]
        step = [1 if k in preferred else (None if constrained else 1 + self.nonpref_penalty)
                for k in range(nl)]

        # heuristic: planar distance to the target bounding box plus via cost.
        # Away from the target column a path must also reach a layer that
        # allows planar moves, which matters in constrained mode.
        hi = [imin - i if i < imin else i - imax if i > imax else 0 for i in range(nx)]
        hj = [jmin - j if j < jmin else j - jmax if j > jmax else 0 for j in range(ny)]
        span = [kmin - k if k < kmin else k - kmax if k > kmax else 0 for k in range(nl)]
        hkn = [vp * d for d in span]
        planar = [k for k in range(nl) if step[k] is not None]
        hkf = [vp * min((abs(k - p) + span[p] for p in planar), default=0) for k in range(nl)]

        def h(n):
            k, rest = divmod(n, plane)
            i, j = divmod(rest, ny)
            d = hi[i] + hj[j]
            return d + (hkf[k] if d else hkn[k])

        total = nl * plane
        INF = 1 << 60
        g = [INF] * total
        prev = {}
        done = bytearray(total)
        heap = []
        for src in sorted(set(sources)):
            if blk[src]:
                continue
            g[src] = 0
            prev[src] = None
            hs = h(src)
            heap.append((hs, hs, src))
        heapq.heapify(heap)
        ap = self.access_penalty
        push, pop = heapq.heappush, heapq.heappop
        while heap:
            _, _, n = pop(heap)
            if done[n]:
                continue
            done[n] = 1
            if n in targets:
                path = [n]
                while prev[path[-1]] is not None:
                    path.append(prev[path[-1]])
                return g[n], path[::-1]
            gn = g[n]
            k, rest = divmod(n, plane)
            i, j = divmod(rest, ny)
            c = step[k]
            nbrs = []
            if c is not None:
                ci, cj = (c, c + ww) if horiz[k] else (c + ww, c)
                if i > 0:
                    d = hi[i - 1] + hj[j]
                    nbrs.append((n - ny, ci, d + (hkf[k] if d else hkn[k])))
                if i < nx - 1:
                    d = hi[i + 1] + hj[j]
                    nbrs.append((n + ny, ci, d + (hkf[k] if d else hkn[k])))
                if j > 0:
                    d = hi[i] + hj[j - 1]
                    nbrs.append((n - 1, cj, d + (hkf[k] if d else hkn[k])))
                if j < ny - 1:
                    d = hi[i] + hj[j + 1]
                    nbrs.append((n + 1, cj, d + (hkf[k] if d else hkn[k])))
            d = hi[i] + hj[j]
            if k > 0:
                nbrs.append((n - plane, vp, d + (hkf[k - 1] if d else hkn[k - 1])))
            if k < top:
                nbrs.append((n + plane, vp, d + (hkf[k + 1] if d else hkn[k + 1])))
            for m, c, hm in nbrs:
                if blk[m] or done[m]:
                    continue
                if acc is not None and m >= plane and acc[m % plane]:
                    c += ap
                gm = gn + c
                if gm < g[m]:
                    g[m] = gm
                    prev[m] = n
                    push(heap, (gm + hm, hm, m))
        return None

    # -- conversion --------------------------------------------------------
    def to_geometry(self, paths, widths) -> tuple[list[WireSegment], list[ViaInstance]]:
        segs: list[WireSegment] = []
        vias: list[ViaInstance] = []
        seen_v = set()
        for path in paths:
            run = None  # (layer, start node, axis)
            for a, b in zip(path, path[1:]):
                ka, ia, ja = self.unpack(a)
                kb, ib, jb = self.unpack(b)
                if ka != kb:
                    if run is not None:
                        segs.append(self._segment(run[0], run[1], a, widths))
                        run = None
                    lo = min(ka, kb)
                    key = (lo, ia, ja)
                    if key not in seen_v:
                        seen_v.add(key)
                        v = self.tech.default_via(self.layers[lo].name)
                        vias.append(ViaInstance(v.name, int(self.xs[ia]), int(self.ys[ja])))
                    continue
                axis = ia != ib
                if run is not None and run[2] != axis:
                    segs.append(self._segment(run[0], run[1], a, widths))
                    run = None
                if run is None:
                    run = (ka, a, axis)
            if run is not None:
                segs.append(self._segment(run[0], run[1], path[-1], widths))
        return segs, vias

    def _segment(self, k, a, b, widths) -> WireSegment:
        _, ia, ja = self.unpack(a)
        _, ib, jb = self.unpack(b)
        (ia, ja), (ib, jb) = sorted([(ia, ja), (ib, jb)])
        return WireSegment(self.layers[k].name, int(self.xs[ia]), int(self.ys[ja]),
                           int(self.xs[ib]), int(self.ys[jb]), widths[k])


def _pin_nodes(grid: RouteGrid, layout: Layout, ref, blocked) -> list[int]:
    out = []
    for layer, r in layout.pin_shapes(ref):
        out += [n for n in grid.nodes_in(layer, r) if not blocked.flat[n]]
    return sorted(set(out))


def _attempt(grid: RouteGrid, layout: Layout, net: Net, widths, preferred, constrained):
    blocked = grid.blocked(net.name, widths)
    access = grid.access_mask(net.name)
    if any(w > l.default_width for w, l in zip(widths, grid.layers)):
        # wide wires on the neighbouring track also block a pin's via stack
        grown = access.copy()
        grown[1:, :] |= access[:-1, :]
        grown[:-1, :] |= access[1:, :]
        grown[:, 1:] |= access[:, :-1]
        grown[:, :-1] |= access[:, 1:]
        access = grown
    refs = list(net.pins)
    driver = layout.driver(net) or refs[0]
    refs.remove(driver)
    tree = _pin_nodes(grid, layout, driver, blocked)
    if not tree:
        return None
    pin_layers = {grid.lindex[l] for ref in net.pins for l, _ in layout.pin_shapes(ref) if l in grid.lindex}
    via_top = max(list(preferred) + list(pin_layers)) if constrained else None
    targets = []
    for ref in refs:
        nodes = _pin_nodes(grid, layout, ref, blocked)
        if not nodes:
            return None
        targets.append((ref, nodes))

    def dist(item):
        _, nodes = item
        k, i, j = grid.unpack(nodes[0])
        k0, i0, j0 = grid.unpack(tree[0])
        return abs(i - i0) + abs(j - j0), item[0]

    targets.sort(key=dist)
    # cheap reachability check before any search
    comp = grid.components(blocked, preferred, constrained, via_top).ravel()
    reach = {int(comp[n]) for n in tree}
    if any(not any(int(comp[n]) in reach for n in nodes) for _, nodes in targets):
        return None
    tree_set = set(tree)
    paths = []
    cost = 0
    for ref, nodes in targets:
        if tree_set & set(nodes):
            continue
        found = grid.search(tree_set, nodes, blocked, preferred, constrained, via_top, access)
        if found is None:
            return None
        c, path = found
        cost += c
        paths.append(path)
        tree_set.update(path)
    return cost, paths


def route_net(grid: RouteGrid, layout: Layout, net: Net, rule: RouteRule | None = None,
              commit: bool = True) -> RouteResult:
    """Rip up and route ``net``; tries the rule first, then default widths on all layers."""
    if len(net.pins) < 2:
        raise RouteError(f"net {net.name} has fewer than two pins")
    rule = rule or net.rule or default_rule(layout, net)
    old_route, old_vias = net.route, net.vias
    net.route, net.vias = [], []
    grid.sync_net(layout, net)
    preferred = {grid.lindex[l] for l in rule.preferred_layers if l in grid.lindex}
    # non-default widths apply on the rule's own layers only
    widths = [rule.width if rule.width and k in preferred else l.default_width
              for k, l in enumerate(grid.layers)]
    found = _attempt(grid, layout, net, widths, preferred, True) if preferred else None
    fallback = found is None
    if fallback:
        found = _attempt(grid, layout, net, [l.default_width for l in grid.layers], preferred, False)
    if found is None:
        net.route, net.vias = old_route, old_vias
        grid.sync_net(layout, net)
        raise RouteError(f"net {net.name} is unroutable")
    cost, paths = found
    wl = [l.default_width for l in grid.layers] if fallback else widths
    segs, vias = grid.to_geometry(paths, wl)
    result = RouteResult(segs, vias, fallback, cost)
    if commit:
        net.route, net.vias = segs, vias
        net.rule = rule
    else:
        net.route, net.vias = old_route, old_vias
    grid.sync_net(layout, net)
    if fallback:
        log.debug("net %s routed with default rules", net.name)
    return result


def route_order(layout: Layout, names) -> list[str]:
    """Assets first, then descending pin count, then name."""
    return sorted(names, key=lambda n: (not layout.nets[n].is_asset, -len(layout.nets[n].pins), n))


def reroute(grid: RouteGrid, layout: Layout, names, rules: dict | None = None) -> dict[str, RouteResult]:
    """Route several nets in priority order with one rip-up round for failures.

    Raises RouteError if any net still fails; nets routed before the failure
    keep their new routes, so callers should checkpoint.
    """
    rules = rules or {}
    names = [n for n in route_order(layout, names) if len(layout.nets[n].pins) >= 2]
    for n in names:
        net = layout.nets[n]
        net.route, net.vias = [], []
        grid.sync_net(layout, net)
    results = {}
    failed = []
    for n in names:
        try:
            results[n] = route_net(grid, layout, layout.nets[n], rules.get(n))
        except RouteError:
            failed.append(n)
    if failed:
        # rip up everything once more and route the failures first
        for n in names:
            net = layout.nets[n]
            net.route, net.vias = [], []
            grid.sync_net(layout, net)
        results = {}
        for n in failed + [m for m in names if m not in failed]:
            results[n] = route_net(grid, layout, layout.nets[n], rules.get(n))
    return results


# --- post-route edits --------------------------------------------------------

def _conflicts(index: ShapeIndex, layer, r: Rect, owners) -> bool:
    s = layer.min_spacing
    for o, other in index.query(layer.name, r, margin=s):
        if o in owners:
            continue
        gx, gy = r.gap(other)
        if gx < s and gy < s:
            return True
    return False


def _multicut_choices(tech, bottom: str, top: str):
    vias = [v for v in tech.vias.values() if v.bottom == bottom and v.top == top and v.cut_count > 1]
    return sorted(vias, key=lambda v: -v.cut_count)


def insert_multicut_vias(layout: Layout, grid: RouteGrid | None = None,
                         layer_pair: tuple[str, str] = ("M1", "M2"), nets=None) -> tuple[int, int]:
    """Replace single-cut vias on ``layer_pair`` with the largest legal array.

    ``nets`` restricts the conversion to those net names (default: all).
    Returns (replaced, skipped).
    """
    tech = layout.tech
    bottom, top = layer_pair
    choices = _multicut_choices(tech, bottom, top)
    index = ShapeIndex.from_layout(layout)
    added: list[tuple[str, str, Rect]] = []
    replaced = skipped = 0
    for name in sorted(layout.nets if nets is None else set(nets) & set(layout.nets)):
        net = layout.nets[name]
        new_vias = []
        for v in net.vias:
            d = tech.vias[v.via]
            if d.bottom != bottom or d.top != top or d.cut_count > 1:
                new_vias.append(v)
                continue
            pick = None
            for cand in choices:
                shapes = [(l, r.translate(v.x, v.y)) for l, r in
                          [(cand.bottom, r) for r in cand.bottom_rects] + [(cand.cut, r) for r in cand.cut_rects]
                          + [(cand.top, r) for r in cand.top_rects]]
                if any(_conflicts(index, tech.layer(l), r, {name}) for l, r in shapes):
                    continue
                if any(_clash(tech.layer(l), r, o, ro) for l, r in shapes
                       for o, lo, ro in added if lo == l and o != name):
                    continue
                pick = cand
                added += [(name, l, r) for l, r in shapes]
                break
            if pick is None:
                skipped += 1
                new_vias.append(v)
            else:
                new_vias.append(ViaInstance(pick.name, v.x, v.y))
                replaced += 1
        if new_vias != net.vias:
            net.vias = new_vias
            if grid is not None:
                grid.sync_net(layout, net)
    return replaced, skipped


def _clash(layer, r: Rect, owner, other: Rect) -> bool:
    gx, gy = r.gap(other)
    return gx < layer.min_spacing and gy < layer.min_spacing


@dataclass
class WidenResult:
    width: int
    widened: int = 0
    kept: list[WireSegment] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def widen_target(layer, factor: float, cap: int) -> int:
    return min(int(layer.default_width * factor), cap, layer.max_width)


def widen_net(layout: Layout, net: Net, factor: float, cap: int, grid: RouteGrid | None = None,
              index: ShapeIndex | None = None) -> WidenResult:
    """Widen every segment of ``net`` to ``min(default*factor, cap, max_width)``.

    Segments whose widened shape would violate spacing keep their width and
    are listed in ``kept``.
    """
    tech = layout.tech
    res = WidenResult(width=max((s.width for s in net.route), default=0))
    if factor <= 1:
        return res
    if index is None:
        index = ShapeIndex.from_layout(layout)
    new = []
    for s in net.route:
        layer = tech.layer(s.layer)
        if cap < layer.default_width:
            res.warnings.append(f"cap below default width on {s.layer}")
            new.append(s)
            continue
        tgt = widen_target(layer, factor, cap)
        if tgt <= s.width:
            new.append(s)
            continue
        wide = WireSegment(s.layer, s.x0, s.y0, s.x1, s.y1, tgt)
        if _conflicts(index, layer, wide.rect, {net.name}):
            res.kept.append(s)
            new.append(s)
        else:
            new.append(wide)
            res.widened += 1
    net.route = new
    res.width = max((s.width for s in new), default=0)
    if grid is not None:
        grid.sync_net(layout, net)
    return res


__all__ = ["RouteError", "RouteRule", "RouteResult", "RouteGrid", "route_net", "reroute", "route_order",
           "default_rule", "insert_multicut_vias", "widen_net", "widen_target", "WidenResult", "IO"]
