"""Placed-and-routed layout model and placement legality checks."""

from __future__ import annotations

import copy

import numpy as np
from dataclasses import dataclass, field
from typing import Iterator

from .geometry import Rect
from .tech import CellMaster, Technology, ViaDef

ORIENTS = ("N", "FN", "S", "FS")
_FLIP_X = {"N": "FN", "FN": "N", "S": "FS", "FS": "S"}
_FLIP_Y = {"N": "FS", "FS": "N", "FN": "S", "S": "FN"}
IO = "PIN"  # instance slot used for IO pins in net pin refs


class LayoutError(ValueError):
    pass


def flip_x(orient: str) -> str:
    """Mirror about the Y axis (N <-> FN, S <-> FS)."""
    return _FLIP_X[orient]


def flip_y(orient: str) -> str:
    return _FLIP_Y[orient]


def row_orient(orient: str, row_flipped: bool) -> str:
    """Orientation compatible with a row, preserving the x-mirror state."""
    mirrored = orient in ("FN", "S")
    if row_flipped:
        return "S" if mirrored else "FS"
    return "FN" if mirrored else "N"


def transform_rect(r: Rect, orient: str, w: int, h: int, x: int, y: int) -> Rect:
    lo_x, hi_x = r.lo_x, r.hi_x
    lo_y, hi_y = r.lo_y, r.hi_y
    if orient in ("FN", "S"):
        lo_x, hi_x = w - hi_x, w - lo_x
    if orient in ("FS", "S"):
        lo_y, hi_y = h - hi_y, h - lo_y
    return Rect(lo_x + x, lo_y + y, hi_x + x, hi_y + y)


@dataclass
class Row:
    name: str
    x: int
    y: int
    site_count: int
    site_width: int
    height: int
    flipped: bool = False  # True for FS rows

    @property
    def orient(self) -> str:
        return "FS" if self.flipped else "N"

    @property
    def rect(self) -> Rect:
        return Rect(self.x, self.y, self.x + self.site_count * self.site_width, self.y + self.height)

    def site_x(self, site: int) -> int:
        return self.x + site * self.site_width


@dataclass
class Instance:
    name: str
    master: CellMaster
    x: int | None = None
    y: int | None = None
    orient: str = "N"
    fixed: bool = False

    def __deepcopy__(self, memo):
        return Instance(self.name, self.master, self.x, self.y, self.orient, self.fixed)

    @property
    def placed(self) -> bool:
        return self.x is not None and self.y is not None


@dataclass(frozen=True)
class WireSegment:
    layer: str
    x0: int
    y0: int
    x1: int
    y1: int
    width: int

    def __deepcopy__(self, memo):
        return self  # immutable

    @property
    def rect(self) -> Rect:
        h = self.width // 2
        return Rect(min(self.x0, self.x1) - h, min(self.y0, self.y1) - h,
                    max(self.x0, self.x1) + h, max(self.y0, self.y1) + h)

    @property
    def length(self) -> int:
        return abs(self.x1 - self.x0) + abs(self.y1 - self.y0)

    @property
    def axis_aligned(self) -> bool:
        return self.x0 == self.x1 or self.y0 == self.y1


@dataclass(frozen=True)
class ViaInstance:
    via: str
    x: int
    y: int

    def __deepcopy__(self, memo):
        return self  # immutable


@dataclass
class IOPin:
    name: str
    net: str | None
    direction: str  # "input" | "output"
    layer: str
    shape: Rect  # relative to (x, y)
    x: int
    y: int
    use: str = "signal"

    @property
    def rect(self) -> Rect:
        return self.shape.translate(self.x, self.y)


@dataclass
class Net:
    name: str
    kind: str = "signal"  # "signal" | "clock"
    pins: list[tuple[str, str]] = field(default_factory=list)
    route: list[WireSegment] = field(default_factory=list)
    vias: list[ViaInstance] = field(default_factory=list)
    is_asset: bool = False
    original: str | None = None
    rule: object | None = None  # RouteRule assigned by passes; not serialized

    @property
    def routed(self) -> bool:
        return bool(self.route or self.vias)

    @property
    def wirelength(self) -> int:
        return sum(s.length for s in self.route)


@dataclass
class AssetSet:
    cell_assets: frozenset[str] = frozenset()
    net_assets: frozenset[str] = frozenset()

    def __len__(self):
        return len(self.cell_assets) + len(self.net_assets)

    @property
    def key(self) -> tuple:
        return tuple(sorted(self.cell_assets)), tuple(sorted(self.net_assets))


@dataclass
class Violation:
    kind: str
    objects: tuple[str, ...]
    message: str = ""
    layer: str | None = None
    rect: Rect | None = None


@dataclass
class PassCheckpoint:
    label: str
    state: dict


class Layout:
    """Mutable layout database shared by all analyses and passes."""

    def __init__(self, name: str, tech: Technology, die: Rect, rows=None,
                 instances=None, nets=None, io_pins=None):
        self.name = name
        self.tech = tech
        self.die = die
        self.rows: list[Row] = list(rows or [])
        self.instances: dict[str, Instance] = dict(instances or {})
        self.nets: dict[str, Net] = dict(nets or {})
        self.io_pins: dict[str, IOPin] = dict(io_pins or {})

    # -- snapshots ---------------------------------------------------------
    def _state(self) -> dict:
        return {"name": self.name, "die": self.die, "rows": self.rows,
                "instances": self.instances, "nets": self.nets, "io_pins": self.io_pins}

    def snapshot(self, label: str = "") -> PassCheckpoint:
        return PassCheckpoint(label, copy.deepcopy(self._state()))

    def restore(self, cp: PassCheckpoint) -> None:
        for k, v in copy.deepcopy(cp.state).items():
            setattr(self, k, v)

    def copy(self) -> "Layout":
        out = Layout(self.name, self.tech, self.die)
        for k, v in copy.deepcopy(self._state()).items():
            setattr(out, k, v)
        return out

    # -- lookups -----------------------------------------------------------
    @property
    def core(self) -> Rect:
        if not self.rows:
            return self.die
        return Rect(min(r.x for r in self.rows), min(r.y for r in self.rows),
                    max(r.rect.hi_x for r in self.rows), max(r.rect.hi_y for r in self.rows))

    def row_at(self, y: int) -> Row | None:
        for r in self.rows:
            if r.y == y:
                return r
        return None

    def root_net(self, name: str) -> str:
        seen = set()
        while True:
            net = self.nets.get(name)
            if net is None or not net.original or name in seen:
                return name
            seen.add(name)
            name = net.original

    def pin_index(self) -> dict[tuple[str, str], str]:
        """Map (instance, pin) -> net name."""
        out = {}
        for net in self.nets.values():
            for ref in net.pins:
                out[ref] = net.name
        return out

    def connected_instances(self) -> set[str]:
        return {inst for net in self.nets.values() for inst, _ in net.pins if inst != IO}

    def connectivity_state(self, inst_name: str) -> str:
        return "connected" if inst_name in self.connected_instances() else "unconnected"

    def nets_of(self, inst_name: str) -> list[str]:
        return sorted({n.name for n in self.nets.values() for i, _ in n.pins if i == inst_name})

    def driver(self, net: Net) -> tuple[str, str] | None:
        for ref in net.pins:
            if self.pin_direction(ref) == "output":
                return ref
        return None

    def sinks(self, net: Net) -> list[tuple[str, str]]:
        return [ref for ref in net.pins if self.pin_direction(ref) == "input"]

    def pin_direction(self, ref: tuple[str, str]) -> str:
        """Direction as seen from the net: drivers are 'output', loads 'input'."""
        inst, pin = ref
        if inst == IO:
            io = self.io_pins[pin]
            return "output" if io.direction == "input" else "input"
        return self.instances[inst].master.pin(pin).direction

    # -- geometry ----------------------------------------------------------
    def pin_shapes(self, ref: tuple[str, str]) -> list[tuple[str, Rect]]:
        inst_name, pin = ref
        if inst_name == IO:
            io = self.io_pins[pin]
            return [(io.layer, io.rect)]
        inst = self.instances[inst_name]
        m = inst.master
        return [(layer, transform_rect(r, inst.orient, m.width, m.height, inst.x, inst.y))
                for layer, r in m.pin(pin).shapes]

    def instance_pin_shapes(self, inst: Instance) -> list[tuple[str, str, Rect]]:
        m = inst.master
        return [(p.name, layer, transform_rect(r, inst.orient, m.width, m.height, inst.x, inst.y))
                for p in m.pins for layer, r in p.shapes]

    def via_def(self, v: ViaInstance) -> ViaDef:
        return self.tech.vias[v.via]

    def via_shapes(self, v: ViaInstance) -> list[tuple[str, Rect]]:
        """Metal and cut rects of a placed via."""
        return list(_via_shapes(self.via_def(v), v.x, v.y))

    def net_metal(self, net: Net, with_pins: bool = False) -> list[tuple[str, Rect]]:
        """Routing-layer shapes of a net: wires, via enclosures and optionally pins."""
        out = [(s.layer, s.rect) for s in net.route]
        for v in net.vias:
            d = self.via_def(v)
            out += [(d.bottom, r.translate(v.x, v.y)) for r in d.bottom_rects]
            out += [(d.top, r.translate(v.x, v.y)) for r in d.top_rects]
        if with_pins:
            for ref in net.pins:
                out += self.pin_shapes(ref)
        return out

    def iter_shapes(self) -> Iterator[tuple[str, str, Rect]]:
        """(owner, layer, rect) for every routing-layer and cut shape in the layout.

        Owners are net names; unconnected pins get a private owner so that they
        conflict with every net.
        """
        index = self.pin_index()
        for inst in self.instances.values():
            if not inst.placed:
                continue
            for pin, layer, r in self.instance_pin_shapes(inst):
                owner = index.get((inst.name, pin), f"~{inst.name}/{pin}")
                yield owner, layer, r
        for io in self.io_pins.values():
            owner = io.net if io.net in self.nets else f"~PIN/{io.name}"
            yield owner, io.layer, io.rect
        for net in self.nets.values():
            for s in net.route:
                yield net.name, s.layer, s.rect
            for v in net.vias:
                for layer, r in self.via_shapes(v):
                    yield net.name, layer, r


_VIA_CACHE: dict[int, tuple[ViaDef, dict]] = {}


def _via_shapes(d: ViaDef, x: int, y: int) -> tuple[tuple[str, Rect], ...]:
    """Placed via geometry, memoized per via definition object."""
    entry = _VIA_CACHE.get(id(d))
    if entry is None or entry[0] is not d:
        entry = _VIA_CACHE[id(d)] = (d, {})
    placed = entry[1]
    out = placed.get((x, y))
    if out is None:
        if len(placed) > 100_000:
            placed.clear()
        shapes = [(d.bottom, r.translate(x, y)) for r in d.bottom_rects]
        shapes += [(d.cut, r.translate(x, y)) for r in d.cut_rects]
        shapes += [(d.top, r.translate(x, y)) for r in d.top_rects]
        out = placed[(x, y)] = tuple(shapes)
    return out


def on_track(layout: Layout, s: WireSegment) -> bool:
    """Both endpoints of ``s`` lie on the routing grid of its layer."""
    layer = layout.tech.layer(s.layer)
    p = layer.pitch
    if not p:
        return True
    ox, oy = layout.die.lo_x + layer.offset, layout.die.lo_y + layer.offset
    return all((x - ox) % p == 0 for x in (s.x0, s.x1)) and all((y - oy) % p == 0 for y in (s.y0, s.y1))


def instance_footprint(inst: Instance) -> Rect:
    if not inst.placed:
        raise LayoutError(f"instance {inst.name} is unplaced")
    return Rect(inst.x, inst.y, inst.x + inst.master.width, inst.y + inst.master.height)


def utilization(layout: Layout) -> float:
    """Functional cell area over core area (fillers excluded)."""
    core = layout.core.area
    used = sum(instance_footprint(i).area for i in layout.instances.values()
               if i.placed and not i.master.is_filler)
    return used / core if core else 0.0


def check_legal_placement(layout: Layout) -> list[Violation]:
    out: list[Violation] = []
    rows = {r.y: r for r in layout.rows}
    boxes = []
    for inst in sorted(layout.instances.values(), key=lambda i: i.name):
        if not inst.placed:
            out.append(Violation("unplaced", (inst.name,), "instance is unplaced"))
            continue
        if inst.orient not in ORIENTS:
            out.append(Violation("orientation", (inst.name,), f"bad orientation {inst.orient}"))
        box = instance_footprint(inst)
        boxes.append((box, inst.name))
        row = rows.get(inst.y)
        if row is None:
            out.append(Violation("alignment", (inst.name,), "origin not on a row", rect=box))
            continue
        if (inst.x - row.x) % row.site_width:
            out.append(Violation("alignment", (inst.name,), "origin off the site grid", rect=box))
        elif not row.rect.contains(box):
            out.append(Violation("outside", (inst.name,), "footprint leaves its row", rect=box))
        elif inst.orient in ORIENTS and row_orient(inst.orient, row.flipped) != inst.orient:
            out.append(Violation("orientation", (inst.name,),
                                 f"orientation {inst.orient} incompatible with row {row.name}", rect=box))
        if not layout.die.contains(box):
            out.append(Violation("outside", (inst.name,), "footprint outside die", rect=box))
    # sweep along x for pairwise overlap
    boxes.sort(key=lambda b: (b[0].lo_x, b[1]))
    active: list[tuple[Rect, str]] = []
    for box, name in boxes:
        active = [a for a in active if a[0].hi_x > box.lo_x]
        for other, oname in active:
            if other.intersects(box):
                pair = tuple(sorted((oname, name)))
                out.append(Violation("overlap", pair, f"{pair[0]} overlaps {pair[1]}", rect=other.clip(box)))
        active.append((box, name))
    return out


def net_components(layout: Layout, net: Net) -> tuple[list[int], list[tuple[str, str]]]:
    """Union-find over a net's wires, vias and pins.

    Returns the component id of every pin (in ``net.pins`` order) and the pin refs.
    """
    items: list[list[tuple[str, Rect]]] = []
    for s in net.route:
        items.append([(s.layer, s.rect)])
    for v in net.vias:
        d = layout.via_def(v)
        items.append([(d.bottom, r.translate(v.x, v.y)) for r in d.bottom_rects]
                     + [(d.top, r.translate(v.x, v.y)) for r in d.top_rects])
    pin_start = len(items)
    for ref in net.pins:
        items.append(layout.pin_shapes(ref))
    parent = list(range(len(items)))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    by_layer: dict[str, list[tuple[Rect, int]]] = {}
    for k, shapes in enumerate(items):
        for layer, r in shapes:
            by_layer.setdefault(layer, []).append((r, k))
    for shapes in by_layer.values():
        shapes.sort(key=lambda t: t[0].lo_x)
        for a in range(len(shapes)):
            ra, ka = shapes[a]
            for b in range(a + 1, len(shapes)):
                rb, kb = shapes[b]
                if rb.lo_x > ra.hi_x:
                    break
                if ra.touches(rb):
                    pa, pb = find(ka), find(kb)
                    if pa != pb:
                        parent[pa] = pb
    return [find(pin_start + k) for k in range(len(net.pins))], list(net.pins)


def net_connected(layout: Layout, net: Net) -> bool:
    comps, _ = net_components(layout, net)
    return len(set(comps)) <= 1


class ShapeIndex:
    """Per-layer arrays of (owner, rect) for window queries."""

    def __init__(self, items):
        by_layer: dict[str, list[tuple[str, Rect]]] = {}
        for owner, layer, r in items:
            by_layer.setdefault(layer, []).append((owner, r))
        self.layers = {}
        for layer, lst in by_layer.items():
            arr = np.array([(r.lo_x, r.lo_y, r.hi_x, r.hi_y) for _, r in lst], dtype=np.int64)
            self.layers[layer] = ([o for o, _ in lst], [r for _, r in lst], arr)

    @classmethod
    def from_layout(cls, layout: Layout) -> "ShapeIndex":
        return cls(layout.iter_shapes())

    def query(self, layer: str, box: Rect, margin: int = 0, strict: bool = True):
        """(owner, rect) pairs on ``layer`` whose rect comes within ``margin`` of ``box``.

        With ``strict`` the inflated windows must overlap in their interiors.
        """
        entry = self.layers.get(layer)
        if entry is None:
            return []
        owners, rects, arr = entry
        lx, ly, hx, hy = box.lo_x - margin, box.lo_y - margin, box.hi_x + margin, box.hi_y + margin
        if strict:
            m = (arr[:, 0] < hx) & (arr[:, 2] > lx) & (arr[:, 1] < hy) & (arr[:, 3] > ly)
        else:
            m = (arr[:, 0] <= hx) & (arr[:, 2] >= lx) & (arr[:, 1] <= hy) & (arr[:, 3] >= ly)
        return [(owners[k], rects[k]) for k in np.flatnonzero(m)]
