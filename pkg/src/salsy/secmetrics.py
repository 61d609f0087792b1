"""Trojan-insertion and front-side exposure metrics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import Rect, bounding_box, subtract_rects, union_and_bare_area
from .layout import AssetSet, Layout, ShapeIndex

FREE, FILLER, UNCONNECTED, BLOCKED = 0, 1, 2, 3


@dataclass
class ExploitableRegion:
    row: int
    start: int
    end: int  # exclusive
    free_tracks: int = 0
    contents: dict = field(default_factory=dict)

    @property
    def site_count(self) -> int:
        return self.end - self.start


def exploitable_runs(mask, threshold: int) -> list[tuple[int, int]]:
    """Maximal [start, end) runs of truthy entries with length >= threshold."""
    m = np.asarray(mask, dtype=bool)
    if m.size == 0:
        return []
    d = np.diff(np.concatenate(([0], m.astype(np.int8), [0])))
    starts = np.flatnonzero(d == 1)
    ends = np.flatnonzero(d == -1)
    keep = (ends - starts) >= threshold
    return [(int(s), int(e)) for s, e in zip(starts[keep], ends[keep])]


def site_states(layout: Layout) -> list[np.ndarray]:
    """Per-row array of site states (FREE, FILLER, UNCONNECTED, BLOCKED)."""
    connected = layout.connected_instances()
    rows = {r.y: k for k, r in enumerate(layout.rows)}
    out = [np.zeros(r.site_count, dtype=np.int8) for r in layout.rows]
    for inst in layout.instances.values():
        if not inst.placed or inst.y not in rows:
            continue
        k = rows[inst.y]
        row = layout.rows[k]
        lo = (inst.x - row.x) // row.site_width
        hi = -(-(inst.x + inst.master.width - row.x) // row.site_width)
        lo, hi = max(lo, 0), min(hi, row.site_count)
        if inst.master.is_filler and not inst.fixed:
            state = FILLER
        elif inst.name in connected or inst.fixed:
            state = BLOCKED
        else:
            state = UNCONNECTED
        seg = out[k][lo:hi]
        np.maximum(seg, state, out=seg)
    return out


def find_exploitable_regions(layout: Layout, threshold: int = 20) -> list[ExploitableRegion]:
    regions = []
    for k, states in enumerate(site_states(layout)):
        for s, e in exploitable_runs(states != BLOCKED, threshold):
            seg = states[s:e]
            contents = {"free": int((seg == FREE).sum()), "filler": int((seg == FILLER).sum()),
                        "unconnected": int((seg == UNCONNECTED).sum())}
            regions.append(ExploitableRegion(k, s, e, 0, contents))
    return regions


def region_rect(layout: Layout, region: ExploitableRegion) -> Rect:
    row = layout.rows[region.row]
    return Rect(row.site_x(region.start), row.y, row.site_x(region.end), row.y + row.height)


def _track_coords(lo: int, hi: int, base: int, pitch: int) -> np.ndarray:
    first = base + -(-(lo - base) // pitch) * pitch
    if first >= hi:
        return np.zeros(0, dtype=np.int64)
    return np.arange(first, hi, pitch, dtype=np.int64)


def count_free_tracks(layout: Layout, region: ExploitableRegion, halo: int = 0,
                      index: ShapeIndex | None = None) -> int:
    """Track segments crossing the halo-expanded region box with nothing within spacing.

    A horizontal track at ``y`` crosses the box when ``lo_y <= y < hi_y``; it is
    free when no shape on that layer comes closer than the layer spacing to the
    default-width wire running along the track across the box.
    """
    if index is None:
        index = ShapeIndex.from_layout(layout)
    tech = layout.tech
    if halo <= 0:
        halo = 2 * tech.routing_layers[0].pitch
    # routing tracks only exist inside the die
    box = region_rect(layout, region).inflate(halo).clip(layout.die)
    if box is None:
        return 0
    total = 0
    for layer in tech.routing_layers:
        h = layer.default_width // 2
        s = layer.min_spacing
        if layer.horizontal:
            coords = _track_coords(box.lo_y, box.hi_y, layout.die.lo_y + layer.offset, layer.pitch)
        else:
            coords = _track_coords(box.lo_x, box.hi_x, layout.die.lo_x + layer.offset, layer.pitch)
        if coords.size == 0:
            continue
        busy = np.zeros(coords.size, dtype=bool)
        for _, r in index.query(layer.name, box, margin=s + h):
            if layer.horizontal:
                if not (r.lo_x < box.hi_x + s and r.hi_x > box.lo_x - s):
                    continue
                busy |= (coords - h < r.hi_y + s) & (coords + h > r.lo_y - s)
            else:
                if not (r.lo_y < box.hi_y + s and r.hi_y > box.lo_y - s):
                    continue
                busy |= (coords - h < r.hi_x + s) & (coords + h > r.lo_x - s)
        total += int((~busy).sum())
    return total


def ti_raw(layout: Layout, threshold: int = 20, halo: int = 0) -> tuple[int, int]:
    regions = find_exploitable_regions(layout, threshold)
    if not regions:
        return 0, 0
    index = ShapeIndex.from_layout(layout)
    sts = sum(r.site_count for r in regions)
    fts = sum(count_free_tracks(layout, r, halo, index) for r in regions)
    return sts, fts


# --- exposure --------------------------------------------------------------

@dataclass
class AssetExposure:
    kind: str  # "cell" | "net"
    name: str
    shape_area: int
    exposed_area: int
    rects: list[tuple[str, Rect]] = field(default_factory=list)


@dataclass
class ExposureMap:
    assets: dict[tuple[str, str], AssetExposure] = field(default_factory=dict)

    @property
    def cell_total(self) -> int:
        return sum(a.exposed_area for a in self.assets.values() if a.kind == "cell")

    @property
    def net_total(self) -> int:
        return sum(a.exposed_area for a in self.assets.values() if a.kind == "net")

    @property
    def total(self) -> int:
        return self.cell_total + self.net_total

    def worst_nets(self, k: int) -> list[AssetExposure]:
        nets = [a for a in self.assets.values() if a.kind == "net"]
        nets.sort(key=lambda a: (-a.exposed_area, a.name))
        return nets[:k]


def asset_net_group(layout: Layout, name: str) -> list[str]:
    """The asset net plus every net derived from it by buffering."""
    return sorted(n for n in layout.nets if layout.root_net(n) == name)


def asset_shapes(layout: Layout, kind: str, name: str) -> list[tuple[str, Rect]]:
    if kind == "cell":
        inst = layout.instances[name]
        if not inst.placed:
            return []
        return [(layer, r) for _, layer, r in layout.instance_pin_shapes(inst)]
    out = []
    for n in asset_net_group(layout, name):
        out += layout.net_metal(layout.nets[n])
    return out


def layer_exposure(shapes: list[Rect], covers: list[Rect], with_rects: bool):
    """(shape area, exposed area, exposed rects) of one layer's shapes."""
    union, area = union_and_bare_area(shapes, covers)
    rects = subtract_rects(shapes, covers) if with_rects and area else []
    return union, area, rects


def exposed_area(layout: Layout, assets: AssetSet, with_rects: bool = True,
                 index: ShapeIndex | None = None) -> ExposureMap:
    """Top-down exposure of every asset.

    Geometry on any routing layer above a shape shadows it. Net assets are not
    shadowed by their own (or derived) nets; cell assets are shadowed by all
    geometry, including the wiring of their own nets.
    """
    tech = layout.tech
    if index is None:
        index = ShapeIndex.from_layout(layout)
    routing = tech.routing_layers
    order = {l.name: k for k, l in enumerate(routing)}
    out = ExposureMap()
    todo = [("cell", c) for c in sorted(assets.cell_assets)] + [("net", n) for n in sorted(assets.net_assets)]
    for kind, name in todo:
        shapes = asset_shapes(layout, kind, name)
        own = set(asset_net_group(layout, name)) if kind == "net" else set()
        by_layer: dict[str, list[Rect]] = {}
        for layer, r in shapes:
            if layer in order:
                by_layer.setdefault(layer, []).append(r)
        total_shape = exposed = 0
        rects = []
        for layer, rs in sorted(by_layer.items(), key=lambda t: order[t[0]]):
            box = bounding_box(rs)
            covers = []
            for upper in routing[order[layer] + 1:]:
                covers += [r for o, r in index.query(upper.name, box) if o not in own]
            u, a, rr = layer_exposure(rs, covers, with_rects)
            total_shape += u
            exposed += a
            rects += [(layer, r) for r in rr]
        out.assets[(kind, name)] = AssetExposure(kind, name, total_shape, exposed, rects)
    return out

