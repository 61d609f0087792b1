"""Technology model: layer stack, vias, placement site and cell masters."""

from __future__ import annotations

from dataclasses import dataclass, field

from .geometry import Rect


class TechError(ValueError):
    pass


@dataclass
class Layer:
    name: str
    kind: str  # "routing" or "cut"
    index: int
    direction: str = ""  # "horizontal" | "vertical" for routing layers
    pitch: int = 0
    offset: int = 0
    default_width: int = 0
    min_width: int = 0
    max_width: int = 0
    min_spacing: int = 0
    rpersq: float = 0.0  # ohm per square
    cpersqdist: float = 0.0  # pF per um^2

    @property
    def is_routing(self) -> bool:
        return self.kind == "routing"

    @property
    def horizontal(self) -> bool:
        return self.direction == "horizontal"

    @property
    def unit_r(self) -> float:
        """Resistance per DBU of length at default width (ohm/DBU)."""
        return self.rpersq / self.default_width if self.default_width else 0.0

    @property
    def unit_c(self) -> float:
        """Capacitance per DBU of length (fF/DBU)."""
        return self.cpersqdist * self.default_width * 1e-3

    def validate(self):
        if not self.is_routing:
            return
        if not (self.min_width <= self.default_width <= self.max_width):
            raise TechError(f"layer {self.name}: widths out of order")
        if self.pitch < self.default_width + self.min_spacing:
            raise TechError(f"layer {self.name}: pitch below width + spacing")


@dataclass
class ViaDef:
    name: str
    bottom: str
    cut: str
    top: str
    bottom_rects: list[Rect]
    cut_rects: list[Rect]
    top_rects: list[Rect]
    resistance: float = 4.0
    default: bool = False

    @property
    def cut_count(self) -> int:
        return len(self.cut_rects)


@dataclass
class PinDef:
    name: str
    direction: str  # "input" | "output"
    use: str = "signal"  # "signal" | "clock"
    shapes: list[tuple[str, Rect]] = field(default_factory=list)


@dataclass
class CellMaster:
    name: str
    width: int
    height: int
    cls: str = "core"  # "core" | "filler" | "buffer"
    pins: list[PinDef] = field(default_factory=list)
    leakage_power: float = 0.0  # uW
    input_cap: float = 0.0  # fF
    intrinsic_delay: float = 0.0  # ps
    drive_slope: float = 0.0  # ps/fF

    def pin(self, name: str) -> PinDef:
        for p in self.pins:
            if p.name == name:
                return p
        raise KeyError(f"{self.name} has no pin {name}")

    @property
    def is_filler(self) -> bool:
        return self.cls == "filler"

    @property
    def is_sequential(self) -> bool:
        return any(p.use == "clock" for p in self.pins)

    @property
    def output_pins(self) -> list[PinDef]:
        return [p for p in self.pins if p.direction == "output"]

    @property
    def input_pins(self) -> list[PinDef]:
        return [p for p in self.pins if p.direction == "input"]


@dataclass
class Site:
    name: str
    width: int
    height: int


@dataclass
class Technology:
    dbu_per_micron: int
    site: Site
    layers: list[Layer]
    vias: dict[str, ViaDef]
    masters: dict[str, CellMaster]

    def __post_init__(self):
        self._by_name = {l.name: l for l in self.layers}

    def layer(self, name: str) -> Layer:
        try:
            return self._by_name[name]
        except KeyError:
            raise TechError(f"unknown layer {name}") from None

    @property
    def routing_layers(self) -> list[Layer]:
        return [l for l in self.layers if l.is_routing]

    @property
    def cut_layers(self) -> list[Layer]:
        return [l for l in self.layers if l.kind == "cut"]

    def routing_index(self, name: str) -> int:
        """0-based position of a routing layer in the stack (M1 -> 0)."""
        return self.layer(name).index - 1

    def default_via(self, bottom: str) -> ViaDef:
        for v in self.vias.values():
            if v.bottom == bottom and v.default:
                return v
        raise TechError(f"no default via above {bottom}")

    def validate(self):
        prev = None
        for l in self.layers:
            l.validate()
            if prev is not None and prev.kind == l.kind:
                raise TechError(f"layer {l.name}: routing and cut layers must alternate")
            prev = l
        if self.layers and (self.layers[0].kind != "routing" or self.layers[-1].kind != "routing"):
            raise TechError("layer stack must start and end with a routing layer")
        idx = [l.index for l in self.routing_layers]
        if idx != sorted(idx) or len(set(idx)) != len(idx):
            raise TechError("routing layer indices are not strictly increasing")
        names = [l.name for l in self.layers]
        for v in self.vias.values():
            try:
                b, c, t = names.index(v.bottom), names.index(v.cut), names.index(v.top)
            except ValueError:
                raise TechError(f"via {v.name} references unknown layer") from None
            if not (c == b + 1 and t == c + 1):
                raise TechError(f"via {v.name}: layers are not adjacent")
        for m in self.masters.values():
            if m.width % self.site.width:
                raise TechError(f"macro {m.name}: width {m.width} is not a multiple of site width {self.site.width}")
            if m.height != self.site.height:
                raise TechError(f"macro {m.name}: height must equal the site height")
            box = Rect(0, 0, m.width, m.height)
            for p in m.pins:
                for _, r in p.shapes:
                    if not box.contains(r):
                        raise TechError(f"macro {m.name}: pin {p.name} outside footprint")


# --- mock technology -------------------------------------------------------

SITE_W = 200
ROW_H = 1600
PITCH = 200
OFFSET = 100
WIRE_W = 100
CUT_W = 60
CUT_SPACE = 80

# (name, sites, pins [(name, dir, use, col, row)], leakage uW, cap fF, delay ps, slope ps/fF, class)
_MASTERS = [
    ("INV_X1", 2, [("A", "input", "signal", 0, 3), ("Z", "output", "signal", 1, 4)], 0.015, 1.2, 8.0, 4.0, "core"),
    ("BUF_X1", 2, [("A", "input", "signal", 0, 4), ("Z", "output", "signal", 1, 3)], 0.025, 1.0, 15.0, 3.0, "buffer"),
    ("NAND2_X1", 3, [("A1", "input", "signal", 0, 3), ("A2", "input", "signal", 1, 5),
                     ("Z", "output", "signal", 2, 3)], 0.020, 1.4, 12.0, 5.0, "core"),
    ("NOR2_X1", 3, [("A1", "input", "signal", 0, 4), ("A2", "input", "signal", 1, 2),
                    ("Z", "output", "signal", 2, 5)], 0.020, 1.5, 14.0, 6.0, "core"),
    ("AOI21_X1", 4, [("A", "input", "signal", 0, 3), ("B1", "input", "signal", 1, 5),
                     ("B2", "input", "signal", 2, 2), ("Z", "output", "signal", 3, 4)], 0.030, 1.6, 18.0, 6.0, "core"),
    ("XOR2_X1", 5, [("A", "input", "signal", 0, 4), ("B", "input", "signal", 2, 2),
                    ("Z", "output", "signal", 4, 5)], 0.040, 2.0, 25.0, 6.0, "core"),
    ("DFF_X1", 8, [("D", "input", "signal", 0, 3), ("CK", "input", "clock", 3, 5),
                   ("Q", "output", "signal", 7, 3)], 0.080, 1.1, 45.0, 4.0, "core"),
    ("FILL1", 1, [], 0.0, 0.0, 0.0, 0.0, "filler"),
    ("FILL2", 2, [], 0.0, 0.0, 0.0, 0.0, "filler"),
    ("FILL4", 4, [], 0.0, 0.0, 0.0, 0.0, "filler"),
    ("FILL8", 8, [], 0.0, 0.0, 0.0, 0.0, "filler"),
]


def _pin_bar(col: int, row: int) -> Rect:
    # vertical M1 bar spanning three track nodes centred on (col, row)
    x = OFFSET + col * PITCH
    y = OFFSET + row * PITCH
    return Rect(x - WIRE_W // 2, y - PITCH - WIRE_W // 2, x + WIRE_W // 2, y + PITCH + WIRE_W // 2)


def _square(cx: int, cy: int, half: int) -> Rect:
    return Rect(cx - half, cy - half, cx + half, cy + half)


def _via_array(name, bottom, cut, top, cuts, resistance, default=False):
    cut_rects = [_square(x, y, CUT_W // 2) for x, y in cuts]
    enc = Rect(min(r.lo_x for r in cut_rects) - 20, min(r.lo_y for r in cut_rects) - 20,
               max(r.hi_x for r in cut_rects) + 20, max(r.hi_y for r in cut_rects) + 20)
    return ViaDef(name, bottom, cut, top, [enc], cut_rects, [enc], resistance / len(cuts), default)


def build_mock65(n_layers: int = 6) -> Technology:
    """Parameterised mock technology with ``n_layers`` routing layers."""
    layers = []
    for k in range(1, n_layers + 1):
        upper = k > 3
        layers.append(Layer(
            name=f"M{k}", kind="routing", index=k,
            direction="horizontal" if k % 2 else "vertical",
            pitch=PITCH, offset=OFFSET, default_width=WIRE_W, min_width=WIRE_W,
            max_width=800, min_spacing=100,
            rpersq=0.15 if upper else 0.38, cpersqdist=0.002,
        ))
        if k < n_layers:
            layers.append(Layer(name=f"V{k}", kind="cut", index=k, default_width=CUT_W,
                                min_width=CUT_W, max_width=CUT_W, min_spacing=CUT_SPACE))
    vias = {}
    for k in range(1, n_layers):
        v = _via_array(f"V{k}{k + 1}", f"M{k}", f"V{k}", f"M{k + 1}", [(0, 0)], 4.0, default=True)
        vias[v.name] = v
    step = CUT_W + CUT_SPACE
    arrays = {
        "2E": [(0, 0), (step, 0)], "2W": [(0, 0), (-step, 0)],
        "2N": [(0, 0), (0, step)], "2S": [(0, 0), (0, -step)],
        "4NE": [(0, 0), (step, 0), (0, step), (step, step)],
        "4NW": [(0, 0), (-step, 0), (0, step), (-step, step)],
        "4SE": [(0, 0), (step, 0), (0, -step), (step, -step)],
        "4SW": [(0, 0), (-step, 0), (0, -step), (-step, -step)],
    }
    for tag, cuts in arrays.items():
        v = _via_array(f"V12_{tag}", "M1", "V1", "M2", cuts, 4.0)
        vias[v.name] = v
    masters = {}
    for name, sites, pins, leak, cap, delay, slope, cls in _MASTERS:
        pdefs = [PinDef(pn, d, u, [("M1", _pin_bar(c, r))]) for pn, d, u, c, r in pins]
        masters[name] = CellMaster(name, sites * SITE_W, ROW_H, cls, pdefs, leak, cap, delay, slope)
    tech = Technology(1000, Site("core", SITE_W, ROW_H), layers, vias, masters)
    tech.validate()
    return tech
