"""Readers and writers for the LEF/DEF subset, asset lists and config files.

Supported LEF: UNITS, SITE, LAYER (ROUTING/CUT), VIA, MACRO/PIN/PORT with
``PROPERTY`` electrical coefficients. Supported DEF: DESIGN, UNITS, DIEAREA,
ROW, COMPONENTS, PINS and NETS with ROUTED wiring.
"""

from __future__ import annotations

import logging
from dataclasses import fields

from .config import ConfigError, PassConfig, ScoreConfig, coerce
from .geometry import Rect
from .layout import (IO, AssetSet, Instance, IOPin, Layout, LayoutError, Net, Row,
                     ViaInstance, WireSegment, on_track)
from .tech import CellMaster, Layer, PinDef, Site, TechError, Technology, ViaDef

log = logging.getLogger(__name__)


class ParseError(ValueError):
    def __init__(self, line: int, msg: str):
        super().__init__(f"line {line}: {msg}")
        self.line = line


class ResolutionError(ValueError):
    pass


class _Tokens:
    def __init__(self, text: str):
        self.toks: list[tuple[str, int]] = []
        for n, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0]
            for t in line.replace(";", " ; ").split():
                self.toks.append((t, n))
        self.pos = 0

    @property
    def line(self) -> int:
        if self.pos < len(self.toks):
            return self.toks[self.pos][1]
        return self.toks[-1][1] if self.toks else 1

    def peek(self, k: int = 0) -> str | None:
        i = self.pos + k
        return self.toks[i][0] if i < len(self.toks) else None

    def next(self) -> str:
        if self.pos >= len(self.toks):
            raise ParseError(self.line, "unexpected end of file")
        t = self.toks[self.pos][0]
        self.pos += 1
        return t

    def expect(self, want: str) -> None:
        line = self.line
        t = self.next()
        if t != want:
            raise ParseError(line, f"expected {want!r}, got {t!r}")

    def number(self) -> float:
        line = self.line
        t = self.next()
        try:
            return float(t)
        except ValueError:
            raise ParseError(line, f"expected a number, got {t!r}") from None

    def until_semicolon(self) -> list[str]:
        out = []
        while True:
            t = self.next()
            if t == ";":
                return out
            out.append(t)

    def error(self, msg: str) -> ParseError:
        return ParseError(self.line, msg)


def _um(v: int, dbu: int = 1000) -> str:
    sign = "-" if v < 0 else ""
    q, r = divmod(abs(v), dbu)
    if r == 0:
        return f"{sign}{q}"
    width = len(str(dbu)) - 1
    return f"{sign}{q}.{r:0{width}d}".rstrip("0")


# --- LEF -------------------------------------------------------------------

def parse_lef(text: str) -> Technology:
    tk = _Tokens(text)
    dbu = 1000
    site = None
    layers: list[Layer] = []
    vias: dict[str, ViaDef] = {}
    masters: dict[str, CellMaster] = {}

    def d(v: float) -> int:
        return int(round(v * dbu))

    while tk.peek() is not None:
        line = tk.line
        kw = tk.next()
        if kw in ("VERSION", "BUSBITCHARS", "DIVIDERCHAR", "MANUFACTURINGGRID", "NAMESCASESENSITIVE"):
            tk.until_semicolon()
        elif kw == "UNITS":
            while tk.peek() != "END":
                sub = tk.next()
                if sub != "DATABASE":
                    raise ParseError(tk.line, f"unknown UNITS keyword {sub!r}")
                tk.expect("MICRONS")
                dbu = int(tk.number())
                tk.expect(";")
            tk.expect("END")
            tk.expect("UNITS")
        elif kw == "SITE":
            name = tk.next()
            w = h = 0
            while tk.peek() != "END":
                sub = tk.next()
                if sub == "SIZE":
                    w = d(tk.number())
                    tk.expect("BY")
                    h = d(tk.number())
                    tk.expect(";")
                elif sub in ("CLASS", "SYMMETRY"):
                    tk.until_semicolon()
                else:
                    raise ParseError(tk.line, f"unknown SITE keyword {sub!r}")
            tk.expect("END")
            tk.expect(name)
            site = Site(name, w, h)
        elif kw == "LAYER":
            layers.append(_parse_layer(tk, d, layers))
        elif kw == "VIA":
            v = _parse_via(tk, d)
            vias[v.name] = v
        elif kw == "MACRO":
            m = _parse_macro(tk, d)
            masters[m.name] = m
        elif kw == "END":
            tk.expect("LIBRARY")
        else:
            raise ParseError(line, f"unknown keyword {kw!r}")
    if site is None:
        raise ParseError(tk.line, "no SITE defined")
    for m in masters.values():
        if m.height == 0:
            m.height = site.height
    tech = Technology(dbu, site, layers, vias, masters)
    try:
        tech.validate()
    except TechError as e:
        raise ParseError(tk.line, str(e)) from None
    return tech


def _parse_layer(tk: _Tokens, d, previous: list[Layer]) -> Layer:
    name = tk.next()
    attrs: dict = {}
    while tk.peek() != "END":
        line = tk.line
        sub = tk.next()
        if sub == "TYPE":
            t = tk.next().upper()
            if t not in ("ROUTING", "CUT"):
                raise ParseError(line, f"unsupported layer type {t}")
            attrs["kind"] = t.lower()
        elif sub == "DIRECTION":
            attrs["direction"] = tk.next().lower()
        elif sub in ("PITCH", "OFFSET", "WIDTH", "MINWIDTH", "MAXWIDTH", "SPACING"):
            attrs[sub] = d(tk.number())
        elif sub == "RESISTANCE":
            tk.expect("RPERSQ")
            attrs["rpersq"] = tk.number()
        elif sub == "CAPACITANCE":
            tk.expect("CPERSQDIST")
            attrs["cpersqdist"] = tk.number()
        else:
            raise ParseError(line, f"unknown LAYER keyword {sub!r}")
        tk.expect(";")
    tk.expect("END")
    tk.expect(name)
    kind = attrs.get("kind")
    if kind is None:
        raise ParseError(tk.line, f"layer {name} has no TYPE")
    n_routing = sum(1 for l in previous if l.is_routing)
    if kind == "routing":
        if previous and previous[-1].is_routing:
            raise ParseError(tk.line, f"layer {name}: routing layers out of order (missing cut layer)")
        width = attrs.get("WIDTH", 0)
        return Layer(name, "routing", n_routing + 1, attrs.get("direction", "horizontal"),
                     attrs.get("PITCH", 0), attrs.get("OFFSET", 0), width,
                     attrs.get("MINWIDTH", width), attrs.get("MAXWIDTH", width),
                     attrs.get("SPACING", 0), attrs.get("rpersq", 0.0), attrs.get("cpersqdist", 0.0))
    if not previous or not previous[-1].is_routing:
        raise ParseError(tk.line, f"layer {name}: cut layer must follow a routing layer")
    width = attrs.get("WIDTH", 0)
    return Layer(name, "cut", n_routing, default_width=width, min_width=width,
                 max_width=width, min_spacing=attrs.get("SPACING", 0))


def _parse_rect(tk: _Tokens, d) -> Rect:
    line = tk.line
    vals = [d(tk.number()) for _ in range(4)]
    tk.expect(";")
    x0, y0, x1, y1 = vals
    if x0 > x1 or y0 > y1:
        raise ParseError(line, "RECT corners out of order")
    return Rect(x0, y0, x1, y1)


def _parse_via(tk: _Tokens, d) -> ViaDef:
    name = tk.next()
    default = False
    if tk.peek() == "DEFAULT":
        tk.next()
        default = True
    res = 4.0
    per_layer: list[tuple[str, list[Rect]]] = []
    while tk.peek() != "END":
        line = tk.line
        sub = tk.next()
        if sub == "RESISTANCE":
            res = tk.number()
            tk.expect(";")
        elif sub == "LAYER":
            per_layer.append((tk.next(), []))
            tk.expect(";")
        elif sub == "RECT":
            if not per_layer:
                raise ParseError(line, "RECT before LAYER")
            per_layer[-1][1].append(_parse_rect(tk, d))
        else:
            raise ParseError(line, f"unknown VIA keyword {sub!r}")
    tk.expect("END")
    tk.expect(name)
    if len(per_layer) != 3:
        raise ParseError(tk.line, f"via {name} must have exactly three layers")
    (b, br), (c, cr), (t, tr) = per_layer
    return ViaDef(name, b, c, t, br, cr, tr, res, default)


def _parse_macro(tk: _Tokens, d) -> CellMaster:
    name = tk.next()
    m = CellMaster(name, 0, 0)
    while tk.peek() != "END":
        line = tk.line
        sub = tk.next()
        if sub == "CLASS":
            words = tk.until_semicolon()
            if words[:1] != ["CORE"]:
                raise ParseError(line, f"unsupported macro class {' '.join(words)}")
            m.cls = {"SPACER": "filler", "BUFFER": "buffer"}.get(words[1] if len(words) > 1 else "", "core")
        elif sub == "SIZE":
            m.width = d(tk.number())
            tk.expect("BY")
            m.height = d(tk.number())
            tk.expect(";")
        elif sub in ("ORIGIN", "SYMMETRY", "SITE", "FOREIGN"):
            tk.until_semicolon()
        elif sub == "PROPERTY":
            key = tk.next()
            val = tk.number()
            tk.expect(";")
            attr = {"LEAKAGE": "leakage_power", "INPUT_CAP": "input_cap",
                    "INTRINSIC_DELAY": "intrinsic_delay", "DRIVE_SLOPE": "drive_slope"}.get(key)
            if attr is None:
                raise ParseError(line, f"unknown macro property {key!r}")
            setattr(m, attr, val)
        elif sub == "PIN":
            m.pins.append(_parse_pin(tk, d))
        else:
            raise ParseError(line, f"unknown MACRO keyword {sub!r}")
    tk.expect("END")
    tk.expect(name)
    return m


def _parse_pin(tk: _Tokens, d) -> PinDef:
    name = tk.next()
    p = PinDef(name, "input")
    while tk.peek() != "END":
        line = tk.line
        sub = tk.next()
        if sub == "DIRECTION":
            p.direction = tk.next().lower()
            tk.expect(";")
        elif sub == "USE":
            p.use = tk.next().lower()
            tk.expect(";")
        elif sub == "PORT":
            layer = None
            while tk.peek() != "END":
                l2 = tk.line
                s2 = tk.next()
                if s2 == "LAYER":
                    layer = tk.next()
                    tk.expect(";")
                elif s2 == "RECT":
                    if layer is None:
                        raise ParseError(l2, "RECT before LAYER")
                    p.shapes.append((layer, _parse_rect(tk, d)))
                else:
                    raise ParseError(l2, f"unknown PORT keyword {s2!r}")
            tk.expect("END")
        else:
            raise ParseError(line, f"unknown PIN keyword {sub!r}")
    tk.expect("END")
    tk.expect(name)
    if p.direction not in ("input", "output"):
        raise ParseError(tk.line, f"pin {name}: unsupported direction {p.direction}")
    return p


def write_lef(tech: Technology) -> str:
    u = lambda v: _um(v, tech.dbu_per_micron)  # noqa: E731
    out = ["VERSION 5.8 ;", "BUSBITCHARS \"[]\" ;", "DIVIDERCHAR \"/\" ;", "",
           "UNITS", f"  DATABASE MICRONS {tech.dbu_per_micron} ;", "END UNITS", "",
           f"SITE {tech.site.name}", "  CLASS CORE ;",
           f"  SIZE {u(tech.site.width)} BY {u(tech.site.height)} ;", f"END {tech.site.name}", ""]
    for l in tech.layers:
        out.append(f"LAYER {l.name}")
        if l.is_routing:
            out += ["  TYPE ROUTING ;", f"  DIRECTION {l.direction.upper()} ;",
                    f"  PITCH {u(l.pitch)} ;", f"  OFFSET {u(l.offset)} ;",
                    f"  WIDTH {u(l.default_width)} ;", f"  MINWIDTH {u(l.min_width)} ;",
                    f"  MAXWIDTH {u(l.max_width)} ;", f"  SPACING {u(l.min_spacing)} ;",
                    f"  RESISTANCE RPERSQ {l.rpersq!r} ;", f"  CAPACITANCE CPERSQDIST {l.cpersqdist!r} ;"]
        else:
            out += ["  TYPE CUT ;", f"  WIDTH {u(l.default_width)} ;", f"  SPACING {u(l.min_spacing)} ;"]
        out += [f"END {l.name}", ""]

    def rects(rs):
        return [f"    RECT {u(r.lo_x)} {u(r.lo_y)} {u(r.hi_x)} {u(r.hi_y)} ;" for r in rs]

    for v in tech.vias.values():
        out.append(f"VIA {v.name}" + (" DEFAULT" if v.default else ""))
        out.append(f"  RESISTANCE {v.resistance!r} ;")
        for layer, rs in ((v.bottom, v.bottom_rects), (v.cut, v.cut_rects), (v.top, v.top_rects)):
            out.append(f"  LAYER {layer} ;")
            out += rects(rs)
        out += [f"END {v.name}", ""]
    for m in tech.masters.values():
        cls = {"filler": "CORE SPACER", "buffer": "CORE BUFFER"}.get(m.cls, "CORE")
        out += [f"MACRO {m.name}", f"  CLASS {cls} ;", "  ORIGIN 0 0 ;",
                f"  SIZE {u(m.width)} BY {u(m.height)} ;", "  SYMMETRY X Y ;", f"  SITE {tech.site.name} ;",
                f"  PROPERTY LEAKAGE {m.leakage_power!r} ;", f"  PROPERTY INPUT_CAP {m.input_cap!r} ;",
                f"  PROPERTY INTRINSIC_DELAY {m.intrinsic_delay!r} ;",
                f"  PROPERTY DRIVE_SLOPE {m.drive_slope!r} ;"]
        for p in m.pins:
            out += [f"  PIN {p.name}", f"    DIRECTION {p.direction.upper()} ;", f"    USE {p.use.upper()} ;",
                    "    PORT"]
            for layer, r in p.shapes:
                out.append(f"      LAYER {layer} ;")
                out.append(f"      RECT {u(r.lo_x)} {u(r.lo_y)} {u(r.hi_x)} {u(r.hi_y)} ;")
            out += ["    END", f"  END {p.name}"]
        out += [f"END {m.name}", ""]
    out.append("END LIBRARY")
    return "\n".join(out) + "\n"


# --- DEF -------------------------------------------------------------------

_REJECTED = {"SPECIALNETS", "GROUPS", "REGIONS", "BLOCKAGES", "VIAS", "TRACKS", "GCELLGRID",
             "NONDEFAULTRULES", "FILLS", "SCANCHAINS"}


def _point(tk: _Tokens, prev: tuple[int, int] | None) -> tuple[int, int]:
    tk.expect("(")
    vals = []
    for k in range(2):
        line = tk.line
        t = tk.next()
        if t == "*":
            if prev is None:
                raise ParseError(line, "'*' with no previous point")
            vals.append(prev[k])
        else:
            try:
                vals.append(int(t))
            except ValueError:
                raise ParseError(line, f"expected integer coordinate, got {t!r}") from None
    tk.expect(")")
    return vals[0], vals[1]


def parse_def(text: str, tech: Technology) -> Layout:
    tk = _Tokens(text)
    name = "design"
    die = None
    rows: list[Row] = []
    instances: dict[str, Instance] = {}
    io_pins: dict[str, IOPin] = {}
    nets: dict[str, Net] = {}
    while tk.peek() is not None:
        line = tk.line
        kw = tk.next()
        if kw in ("VERSION", "DIVIDERCHAR", "BUSBITCHARS"):
            tk.until_semicolon()
        elif kw == "DESIGN":
            name = tk.next()
            tk.expect(";")
        elif kw == "UNITS":
            tk.expect("DISTANCE")
            tk.expect("MICRONS")
            units = int(tk.number())
            tk.expect(";")
            if units != tech.dbu_per_micron:
                raise ParseError(line, f"DEF units {units} differ from technology units {tech.dbu_per_micron}")
        elif kw == "DIEAREA":
            a = _point(tk, None)
            b = _point(tk, a)
            tk.expect(";")
            die = Rect(min(a[0], b[0]), min(a[1], b[1]), max(a[0], b[0]), max(a[1], b[1]))
        elif kw == "ROW":
            words = tk.until_semicolon()
            # ROW name site x y orient DO n BY 1 STEP sx sy
            try:
                rname, _site, x, y, orient = words[0], words[1], int(words[2]), int(words[3]), words[4]
                if words[5] != "DO" or words[7] != "BY":
                    raise ValueError
                count = int(words[6])
                step = int(words[10]) if len(words) > 10 and words[9] == "STEP" else tech.site.width
            except (ValueError, IndexError):
                raise ParseError(line, "malformed ROW statement") from None
            if orient not in ("N", "FS"):
                raise ParseError(line, f"unsupported row orientation {orient}")
            rows.append(Row(rname, x, y, count, step, tech.site.height, orient == "FS"))
        elif kw == "COMPONENTS":
            _parse_components(tk, tech, instances)
        elif kw == "PINS":
            _parse_pins(tk, io_pins)
        elif kw == "NETS":
            _parse_nets(tk, nets)
        elif kw in _REJECTED:
            raise ParseError(line, f"{kw} section is not supported by this DEF subset")
        elif kw == "END":
            tk.expect("DESIGN")
        else:
            raise ParseError(line, f"unknown keyword {kw!r}")
    if die is None:
        raise ParseError(tk.line, "missing DIEAREA")
    layout = Layout(name, tech, die, rows, instances, nets, io_pins)
    _resolve(layout)
    return layout


def _parse_components(tk: _Tokens, tech: Technology, instances: dict):
    tk.number()
    tk.expect(";")
    while tk.peek() == "-":
        tk.next()
        line = tk.line
        iname = tk.next()
        mname = tk.next()
        if mname not in tech.masters:
            raise ResolutionError(f"line {line}: component {iname} references unknown master {mname}")
        inst = Instance(iname, tech.masters[mname])
        while tk.peek() != ";":
            l2 = tk.line
            t = tk.next()
            if t != "+":
                raise ParseError(l2, f"unexpected {t!r} in component")
            attr = tk.next()
            if attr in ("PLACED", "FIXED"):
                inst.x, inst.y = _point(tk, None)
                inst.orient = tk.next()
                inst.fixed = attr == "FIXED"
                if inst.orient not in ("N", "FN", "S", "FS"):
                    raise ParseError(l2, f"unsupported orientation {inst.orient}")
            elif attr == "UNPLACED":
                pass
            else:
                raise ParseError(l2, f"unknown component attribute {attr!r}")
        tk.expect(";")
        if iname in instances:
            raise ParseError(line, f"duplicate component {iname}")
        instances[iname] = inst
    tk.expect("END")
    tk.expect("COMPONENTS")


def _parse_pins(tk: _Tokens, io_pins: dict):
    tk.number()
    tk.expect(";")
    while tk.peek() == "-":
        tk.next()
        line = tk.line
        pname = tk.next()
        attrs = {"net": None, "direction": "input", "use": "signal", "layer": None,
                 "shape": None, "loc": (0, 0)}
        while tk.peek() != ";":
            l2 = tk.line
            t = tk.next()
            if t != "+":
                raise ParseError(l2, f"unexpected {t!r} in pin")
            attr = tk.next()
            if attr == "NET":
                attrs["net"] = tk.next()
            elif attr == "DIRECTION":
                attrs["direction"] = tk.next().lower()
            elif attr == "USE":
                attrs["use"] = tk.next().lower()
            elif attr == "LAYER":
                attrs["layer"] = tk.next()
                a = _point(tk, None)
                b = _point(tk, a)
                attrs["shape"] = Rect(a[0], a[1], b[0], b[1])
            elif attr in ("PLACED", "FIXED"):
                attrs["loc"] = _point(tk, None)
                tk.next()
            else:
                raise ParseError(l2, f"unknown pin attribute {attr!r}")
        tk.expect(";")
        if attrs["layer"] is None:
            raise ParseError(line, f"pin {pname} has no LAYER")
        x, y = attrs["loc"]
        io_pins[pname] = IOPin(pname, attrs["net"], attrs["direction"], attrs["layer"],
                               attrs["shape"], x, y, attrs["use"])
    tk.expect("END")
    tk.expect("PINS")


def _parse_nets(tk: _Tokens, nets: dict):
    tk.number()
    tk.expect(";")
    while tk.peek() == "-":
        tk.next()
        line = tk.line
        net = Net(tk.next())
        while tk.peek() == "(":
            tk.next()
            a = tk.next()
            b = tk.next()
            tk.expect(")")
            net.pins.append((a, b))
        while tk.peek() != ";":
            l2 = tk.line
            t = tk.next()
            if t != "+":
                raise ParseError(l2, f"unexpected {t!r} in net {net.name}")
            attr = tk.next()
            if attr == "USE":
                net.kind = "clock" if tk.next().upper() == "CLOCK" else "signal"
            elif attr == "ORIGINAL":
                net.original = tk.next()
            elif attr == "ROUTED":
                _parse_routing(tk, net)
            else:
                raise ParseError(l2, f"unknown net attribute {attr!r}")
        tk.expect(";")
        if net.name in nets:
            raise ParseError(line, f"duplicate net {net.name}")
        nets[net.name] = net
    tk.expect("END")
    tk.expect("NETS")


def _parse_routing(tk: _Tokens, net: Net):
    while True:
        layer = tk.next()
        width = None
        nxt = tk.peek()
        if nxt is not None and nxt.lstrip("-").isdigit():
            width = int(tk.next())
        prev = None
        while True:
            t = tk.peek()
            if t == "(":
                p = _point(tk, prev)
                if prev is not None:
                    net.route.append(WireSegment(layer, prev[0], prev[1], p[0], p[1], width or 0))
                prev = p
            elif t in (";", "+", "NEW") or t is None:
                break
            else:
                via = tk.next()
                if prev is None:
                    raise tk.error(f"via {via} without a location")
                net.vias.append(ViaInstance(via, prev[0], prev[1]))
        if tk.peek() == "NEW":
            tk.next()
            continue
        return


def _resolve(layout: Layout):
    tech = layout.tech
    for net in layout.nets.values():
        for inst, pin in net.pins:
            if inst == IO:
                if pin not in layout.io_pins:
                    raise ResolutionError(f"net {net.name} references unknown IO pin {pin}")
                continue
            if inst not in layout.instances:
                raise ResolutionError(f"net {net.name} references unknown component {inst}")
            try:
                layout.instances[inst].master.pin(pin)
            except KeyError:
                raise ResolutionError(f"net {net.name} references unknown pin {inst}/{pin}") from None
        fixed_route = []
        for s in net.route:
            if s.layer not in {l.name for l in tech.routing_layers}:
                raise ResolutionError(f"net {net.name} routed on unknown layer {s.layer}")
            if s.width == 0:
                s = WireSegment(s.layer, s.x0, s.y0, s.x1, s.y1, tech.layer(s.layer).default_width)
            fixed_route.append(s)
        net.route = fixed_route
        for v in net.vias:
            if v.via not in tech.vias:
                raise ResolutionError(f"net {net.name} uses unknown via {v.via}")
        off = [s for s in net.route if not on_track(layout, s)]
        if off:
            log.warning("net %s: %d segment(s) off the routing tracks", net.name, len(off))
    for io in layout.io_pins.values():
        if io.net is not None and io.net not in layout.nets:
            raise ResolutionError(f"IO pin {io.name} references unknown net {io.net}")


def write_def(layout: Layout) -> str:
    tech = layout.tech
    die = layout.die
    out = ["VERSION 5.8 ;", "DIVIDERCHAR \"/\" ;", "BUSBITCHARS \"[]\" ;", f"DESIGN {layout.name} ;",
           f"UNITS DISTANCE MICRONS {tech.dbu_per_micron} ;", "",
           f"DIEAREA ( {die.lo_x} {die.lo_y} ) ( {die.hi_x} {die.hi_y} ) ;", ""]
    for r in layout.rows:
        out.append(f"ROW {r.name} {tech.site.name} {r.x} {r.y} {r.orient} DO {r.site_count} BY 1 "
                   f"STEP {r.site_width} 0 ;")
    out.append("")
    out.append(f"COMPONENTS {len(layout.instances)} ;")
    for name in sorted(layout.instances):
        inst = layout.instances[name]
        line = f"- {name} {inst.master.name}"
        if inst.placed:
            line += f" + {'FIXED' if inst.fixed else 'PLACED'} ( {inst.x} {inst.y} ) {inst.orient}"
        out.append(line + " ;")
    out += ["END COMPONENTS", ""]
    out.append(f"PINS {len(layout.io_pins)} ;")
    for name in sorted(layout.io_pins):
        p = layout.io_pins[name]
        line = f"- {name}"
        if p.net is not None:
            line += f" + NET {p.net}"
        s = p.shape
        line += (f" + DIRECTION {p.direction.upper()} + USE {p.use.upper()}"
                 f" + LAYER {p.layer} ( {s.lo_x} {s.lo_y} ) ( {s.hi_x} {s.hi_y} )"
                 f" + PLACED ( {p.x} {p.y} ) N ;")
        out.append(line)
    out += ["END PINS", ""]
    out.append(f"NETS {len(layout.nets)} ;")
    for name in sorted(layout.nets):
        net = layout.nets[name]
        out.append(f"- {name} " + " ".join(f"( {a} {b} )" for a, b in net.pins))
        out.append(f"  + USE {net.kind.upper()}")
        if net.original:
            out.append(f"  + ORIGINAL {net.original}")
        stmts = []
        for s in net.route:
            w = "" if s.width == tech.layer(s.layer).default_width else f" {s.width}"
            stmts.append(f"{s.layer}{w} ( {s.x0} {s.y0} ) ( {s.x1} {s.y1} )")
        for v in net.vias:
            stmts.append(f"{tech.vias[v.via].bottom} ( {v.x} {v.y} ) {v.via}")
        for k, st in enumerate(stmts):
            out.append(("  + ROUTED " if k == 0 else "    NEW ") + st)
        out[-1] += " ;"
    out += ["END NETS", "", "END DESIGN"]
    return "\n".join(out) + "\n"


# --- assets ----------------------------------------------------------------

def load_assets(text: str, layout: Layout) -> AssetSet:
    cells: set[str] = set()
    nets: set[str] = set()
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2 or parts[0] not in ("cell", "net"):
            raise ParseError(n, f"expected 'cell <name>' or 'net <name>', got {line!r}")
        kind, name = parts
        bucket, pool = (cells, layout.instances) if kind == "cell" else (nets, layout.nets)
        if name in bucket:
            raise ParseError(n, f"duplicate {kind} asset {name}")
        if name not in pool:
            raise ResolutionError(f"line {n}: unresolved asset {kind} {name}")
        bucket.add(name)
    for net in layout.nets.values():
        net.is_asset = layout.root_net(net.name) in nets
    return AssetSet(frozenset(cells), frozenset(nets))


def write_assets(assets: AssetSet) -> str:
    lines = [f"cell {c}" for c in sorted(assets.cell_assets)] + [f"net {n}" for n in sorted(assets.net_assets)]
    return "\n".join(lines) + ("\n" if lines else "")


# --- flat config -----------------------------------------------------------

def parse_cfg(text: str) -> tuple[ScoreConfig, PassConfig, dict]:
    """Split a flat ``key = value`` file into score and pass settings.

    Keys present in both records (``gap_threshold``) apply to both. The third
    element holds the raw key/value pairs actually given.
    """
    score_keys = {f.name for f in fields(ScoreConfig)}
    pass_keys = {f.name for f in fields(PassConfig)}
    s_kw, p_kw, given = {}, {}, {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(n, f"expected 'key = value', got {line!r}")
        key, val = (p.strip() for p in line.split("=", 1))
        if key not in score_keys and key not in pass_keys:
            raise ParseError(n, f"unknown config key {key!r}")
        given[key] = val
        try:
            if key in score_keys:
                s_kw[key] = coerce(ScoreConfig, key, val)
            if key in pass_keys:
                p_kw[key] = coerce(PassConfig, key, val)
        except (ValueError, ConfigError) as e:
            raise ParseError(n, str(e)) from None
    try:
        return ScoreConfig(**s_kw), PassConfig(**p_kw), given
    except ConfigError as e:
        raise ParseError(0, str(e)) from None


def write_cfg(score: ScoreConfig | None = None, passes: PassConfig | None = None) -> str:
    out = []
    for obj in (score, passes):
        if obj is None:
            continue
        for f in fields(obj):
            v = getattr(obj, f.name)
            if isinstance(v, tuple):
                v = ",".join(v)
            elif isinstance(v, bool):
                v = str(v).lower()
            out.append(f"{f.name} = {v}")
    return "\n".join(out) + "\n"


def bundled_tech() -> Technology:
    """The mock65 technology parsed from the LEF shipped with the package."""
    from importlib import resources

    return parse_lef(resources.files("salsy").joinpath("data", "mock65.lef").read_text())


def read_layout(def_path, lef_path=None, assets_path=None):
    """Load a layout (and optional asset list) from files. Returns (layout, assets)."""
    from pathlib import Path

    from .tech import build_mock65

    tech = parse_lef(Path(lef_path).read_text()) if lef_path else build_mock65()
    layout = parse_def(Path(def_path).read_text(), tech)
    assets = load_assets(Path(assets_path).read_text(), layout) if assets_path else AssetSet()
    return layout, assets


__all__ = ["ParseError", "ResolutionError", "LayoutError", "parse_lef", "write_lef", "parse_def",
           "write_def", "load_assets", "write_assets", "parse_cfg", "write_cfg", "on_track", "read_layout",
           "bundled_tech"]
