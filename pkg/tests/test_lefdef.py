import json
from importlib import resources

import pytest

from salsy.config import PassConfig, ScoreConfig
from salsy.generate import GenSpec, generate
from salsy.layout import AssetSet, net_connected
from salsy.lefdef import (ParseError, ResolutionError, bundled_tech, load_assets, parse_cfg, parse_def,
                          parse_lef, write_assets, write_cfg, write_def, write_lef)
from salsy.tech import build_mock65

MINI_DEF = """\
VERSION 5.8 ;
DESIGN mini ;
UNITS DISTANCE MICRONS 1000 ;
DIEAREA ( 0 0 ) ( 4000 3600 ) ;
ROW r0 core 1000 1000 N DO 10 BY 1 STEP 200 0 ;
COMPONENTS 2 ;
- u0 BUF_X1 + PLACED ( 1000 1000 ) N ;
- u1 BUF_X1 + PLACED ( 1800 1000 ) FN ;
END COMPONENTS
PINS 0 ;
END PINS
NETS 1 ;
- n0 ( u0 Z ) ( u1 A )
  + USE SIGNAL
  + ROUTED M1 ( 1300 1700 ) ( 2100 1700 ) ;
END NETS
END DESIGN
"""


def test_mock_tech_layer_counts():
    tech = build_mock65()
    assert len(tech.routing_layers) == 6
    assert len(tech.cut_layers) == 5
    assert [l.name for l in tech.routing_layers] == [f"M{k}" for k in range(1, 7)]


def test_lef_round_trip(tech):
    text = write_lef(tech)
    again = parse_lef(text)
    assert write_lef(again) == text
    assert sorted(again.masters) == sorted(tech.masters)
    assert again.masters["BUF_X1"].cls == "buffer"
    assert again.masters["FILL4"].is_filler


def test_bundled_lef_matches_manifest():
    manifest = json.loads(resources.files("salsy").joinpath("data", "mock65.json").read_text())
    tech = bundled_tech()
    assert len(tech.masters) == manifest["master_count"]
    assert sorted(tech.masters) == sorted(manifest["masters"])
    assert write_lef(tech) == write_lef(build_mock65())


def test_lef_unknown_keyword_has_line_number(tech):
    lines = write_lef(tech).splitlines()
    lines.insert(3, "BOGUS thing ;")
    with pytest.raises(ParseError) as e:
        parse_lef("\n".join(lines))
    assert e.value.line == 4
    assert "line 4" in str(e.value)


def test_lef_macro_not_site_multiple(tech):
    text = write_lef(tech).replace("SIZE 0.4 BY 1.6", "SIZE 0.45 BY 1.6", 1)
    assert text != write_lef(tech)
    with pytest.raises(ParseError, match="site"):
        parse_lef(text)


def test_lef_routing_layers_must_alternate(tech):
    text = write_lef(tech)
    # drop the first cut layer so M1 is followed directly by M2
    start = text.index("LAYER V1")
    end = text.index("END V1") + len("END V1")
    with pytest.raises(ParseError, match="out of order"):
        parse_lef(text[:start] + text[end:])


def test_minimal_def(tech):
    layout = parse_def(MINI_DEF, tech)
    assert len(layout.instances) == 2
    assert layout.instances["u1"].orient == "FN"
    # u1 is mirrored, so its A pin sits at x=2100 rather than 1900
    assert layout.pin_shapes(("u1", "A"))[0][1].center == (2100, 1900)
    assert net_connected(layout, layout.nets["n0"])
    assert write_def(parse_def(write_def(layout), tech)) == write_def(layout)


def test_def_rejects_specialnets(tech):
    text = MINI_DEF.replace("END DESIGN", "SPECIALNETS 0 ;\nEND SPECIALNETS\nEND DESIGN")
    with pytest.raises(ParseError, match="SPECIALNETS"):
        parse_def(text, tech)


def test_def_unknown_master_is_resolution_error(tech):
    with pytest.raises((ParseError, ResolutionError), match="NOPE_X1"):
        parse_def(MINI_DEF.replace("- u1 BUF_X1", "- u1 NOPE_X1"), tech)


def test_def_dangling_pin(tech):
    with pytest.raises(ResolutionError, match="u1/Q"):
        parse_def(MINI_DEF.replace("( u1 A )", "( u1 Q )"), tech)


def test_def_syntax_error_line(tech):
    bad = MINI_DEF.replace("DIEAREA ( 0 0 )", "DIEAREA ( 0 zero )")
    with pytest.raises(ParseError) as e:
        parse_def(bad, tech)
    assert e.value.line == 4


def test_def_off_track_warns_but_keeps(tech, caplog):
    layout = parse_def(MINI_DEF.replace("( 1300 1700 ) ( 2100 1700 )", "( 1300 1750 ) ( 2100 1750 )"), tech)
    assert layout.nets["n0"].route[0].y0 == 1750
    assert "off the routing tracks" in caplog.text


def test_empty_nets_section(tech):
    layout = parse_def(MINI_DEF, tech)
    layout.nets.clear()
    text = write_def(layout)
    assert "NETS 0 ;" in text
    assert parse_def(text, tech).nets == {}


def test_def_round_trip_generated():
    layout, assets, _ = generate(GenSpec(seed=5))
    tech = layout.tech
    text = write_def(layout)
    assert write_def(layout) == text
    back = parse_def(text, tech)
    assert write_def(back) == text
    assert sorted(back.instances) == sorted(layout.instances)
    for name, net in layout.nets.items():
        other = back.nets[name]
        assert other.pins == net.pins
        assert sorted(other.route, key=repr) == sorted(net.route, key=repr)
        assert sorted(other.vias, key=repr) == sorted(net.vias, key=repr)


def test_original_extension_round_trips(small):
    layout, _, _ = small
    net = sorted(layout.nets)[0]
    layout.nets[net].original = "parent"
    layout.nets["parent"] = type(layout.nets[net])("parent")
    text = write_def(layout)
    assert "+ ORIGINAL parent" in text
    assert parse_def(text, layout.tech).nets[net].original == "parent"


def test_assets_load(small):
    layout, _, _ = small
    net = sorted(layout.nets)[0]
    inst = sorted(layout.instances)[0]
    a = load_assets(f"# assets\nnet {net}\ncell {inst}\n", layout)
    assert (len(a.net_assets), len(a.cell_assets)) == (1, 1)
    assert layout.nets[net].is_asset
    assert load_assets(write_assets(a), layout) == a


def test_assets_empty_file(small):
    assert load_assets("", small[0]) == AssetSet()


def test_assets_unresolved(small):
    with pytest.raises(ResolutionError, match="unresolved asset"):
        load_assets("net does_not_exist\n", small[0])


def test_assets_duplicate(small):
    net = sorted(small[0].nets)[0]
    with pytest.raises(ParseError, match="duplicate"):
        load_assets(f"net {net}\nnet {net}\n", small[0])


def test_cfg_round_trip():
    s = ScoreConfig(mode="percentage", clock_period=750.0)
    p = PassConfig.profile("contest")
    s2, p2, given = parse_cfg(write_cfg(s, p))
    assert s2 == s and p2 == p
    assert given["mode"] == "percentage"


def test_cfg_errors():
    with pytest.raises(ParseError) as e:
        parse_cfg("clock_period = 5\nnot_a_key = 3\n")
    assert e.value.line == 2
    with pytest.raises(ParseError):
        parse_cfg("w_sts = 0.9\n")  # weight group no longer sums to 1
    with pytest.raises(ParseError):
        parse_cfg("gap_threshold = 1\n")
