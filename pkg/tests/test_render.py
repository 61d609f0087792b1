import xml.etree.ElementTree as ET

from builders import make_row_layout
from salsy.render import render_svg
from salsy.secmetrics import exposed_area, find_exploitable_regions

NS = "{http://www.w3.org/2000/svg}"


def _rects(svg, cls):
    root = ET.fromstring(svg)
    return [e for e in root.iter(f"{NS}rect") if cls in e.get("class", "").split()]


def test_one_region_one_outline(tech):
    layout = make_row_layout(tech, [[("connected", 2), ("free", 20), ("connected", 2)], [("connected", 24)]])
    assert len(find_exploitable_regions(layout)) == 1
    outlines = _rects(render_svg(layout), "exploitable-region")
    assert len(outlines) == 1
    assert outlines[0].get("data-sites") == "20"


def test_no_region_no_outline(tech):
    layout = make_row_layout(tech, [[("connected", 2), ("free", 19), ("connected", 2)]])
    assert _rects(render_svg(layout), "exploitable-region") == []


def test_threshold_changes_outlines(tech):
    layout = make_row_layout(tech, [[("connected", 2), ("free", 12), ("connected", 2), ("free", 8)]])
    assert len(_rects(render_svg(layout, threshold=8), "exploitable-region")) == 2
    assert len(_rects(render_svg(layout, threshold=10), "exploitable-region")) == 1


def test_assets_and_exposure_drawn(small):
    layout, assets, _ = small
    svg = render_svg(layout, assets)
    drawn = {e.get("data-asset") for e in _rects(svg, "cell-asset") + _rects(svg, "net-asset")}
    assert drawn == set(assets.cell_assets) | set(assets.net_assets)
    ex = exposed_area(layout, assets, with_rects=True)
    assert len(_rects(svg, "exposed")) == sum(len(a.rects) for a in ex.assets.values()) > 0


def test_layer_filter_and_size(small):
    layout, _, _ = small
    svg = render_svg(layout, width_px=400, layers=["M2"])
    root = ET.fromstring(svg)
    assert root.get("width") == "400"
    groups = {g.get("id") for g in root.iter(f"{NS}g")}
    assert "layer-M2" in groups and "layer-M3" not in groups
    assert render_svg(layout, width_px=400, layers=["M2"]) == svg
