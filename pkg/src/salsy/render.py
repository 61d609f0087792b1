"""Static SVG rendering of a layout with assets, exposure and exploitable regions."""

from __future__ import annotations

from xml.sax.saxutils import escape

from .geometry import Rect
from .layout import AssetSet, Layout, instance_footprint
from .secmetrics import asset_shapes, exposed_area, find_exploitable_regions, region_rect

# muted per-layer palette, bottom to top
PALETTE = ["#4f81bd", "#c0504d", "#9bbb59", "#8064a2", "#f79646", "#4bacc6", "#7f7f7f", "#2c4d75"]


def _fmt(v: float) -> str:
    s = f"{v:.3f}".rstrip("0").rstrip(".")
    return s or "0"


class _Canvas:
    def __init__(self, die: Rect, width_px: int):
        self.die = die
        self.scale = width_px / max(die.width, 1)
        self.w = width_px
        self.h = max(1, round(die.height * self.scale))
        self.parts: list[str] = []

    def rect(self, r: Rect, cls: str, **attrs) -> None:
        x = (r.lo_x - self.die.lo_x) * self.scale
        y = (self.die.hi_y - r.hi_y) * self.scale  # SVG y grows downward
        extra = "".join(f' {k.replace("_", "-")}="{escape(str(v))}"' for k, v in attrs.items())
        self.parts.append(f'<rect class="{cls}" x="{_fmt(x)}" y="{_fmt(y)}" '
                          f'width="{_fmt(r.width * self.scale)}" height="{_fmt(r.height * self.scale)}"{extra}/>')

    def open(self, gid: str) -> None:
        self.parts.append(f'<g id="{escape(gid)}">')

    def close(self) -> None:
        self.parts.append("</g>")


def render_svg(layout: Layout, assets: AssetSet | None = None, width_px: int = 800,
               threshold: int = 20, layers=None) -> str:
    """SVG text for ``layout``.

    Draws rows, cells, routing layers (bottom first), asset shapes, exposed
    rects and one outline element of class ``exploitable-region`` per region.
    """
    assets = assets or AssetSet()
    cv = _Canvas(layout.die, width_px)
    cv.parts.append(f'<rect class="die" x="0" y="0" width="{cv.w}" height="{cv.h}" fill="#ffffff" stroke="#000"/>')

    cv.open("rows")
    for row in layout.rows:
        cv.rect(row.rect, "row", fill="none", stroke="#dddddd", stroke_width="0.5")
    cv.close()

    cv.open("cells")
    for name in sorted(layout.instances):
        inst = layout.instances[name]
        if not inst.placed:
            continue
        cls = "cell filler" if inst.master.is_filler else "cell"
        if name in assets.cell_assets:
            cls += " asset"
        cv.rect(instance_footprint(inst), cls, fill="#f2f2f2" if inst.master.is_filler else "#d9d9d9",
                stroke="#999999", stroke_width="0.3")
    cv.close()

    wanted = set(layers) if layers else None
    metal: dict[str, list[Rect]] = {}
    for _, layer, r in layout.iter_shapes():
        metal.setdefault(layer, []).append(r)
    for k, layer in enumerate(layout.tech.routing_layers):
        if wanted is not None and layer.name not in wanted:
            continue
        cv.open(f"layer-{layer.name}")
        color = PALETTE[k % len(PALETTE)]
        for r in sorted(metal.get(layer.name, [])):
            cv.rect(r, "metal", fill=color, fill_opacity="0.35")
        cv.close()

    cv.open("assets")
    todo = [("cell", c) for c in sorted(assets.cell_assets)] + [("net", n) for n in sorted(assets.net_assets)]
    for kind, name in todo:
        for layer, r in asset_shapes(layout, kind, name):
            cv.rect(r, f"asset {kind}-asset", fill="none", stroke="#d00000", stroke_width="0.8",
                    data_asset=name, data_layer=layer)
    cv.close()

    cv.open("exposure")
    if len(assets):
        ex = exposed_area(layout, assets, with_rects=True)
        for key in sorted(ex.assets):
            for layer, r in ex.assets[key].rects:
                cv.rect(r, "exposed", fill="#ff0000", fill_opacity="0.6", data_asset=key[1], data_layer=layer)
    cv.close()

    cv.open("regions")
    for reg in find_exploitable_regions(layout, threshold):
        cv.rect(region_rect(layout, reg), "exploitable-region", fill="#ffd700", fill_opacity="0.25",
                stroke="#b8860b", stroke_width="1.5", stroke_dasharray="4 2",
                data_row=reg.row, data_sites=reg.site_count)
    cv.close()

    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{cv.w}" height="{cv.h}" '
            f'viewBox="0 0 {cv.w} {cv.h}">')
    title = f"<title>{escape(layout.name)}</title>"
    return "\n".join([head, title, *cv.parts, "</svg>"]) + "\n"


def write_svg(path, layout: Layout, assets: AssetSet | None = None, **kw) -> None:
    with open(path, "w") as f:
        f.write(render_svg(layout, assets, **kw))
