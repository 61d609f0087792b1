"""Seeded generator of small legal, routed, timing-clean layouts."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ScoreConfig
from .geometry import Rect
from .gridroute import RouteError, RouteGrid, RouteRule, reroute
from .layout import IO, AssetSet, Instance, IOPin, Layout, Net, Row
from .quality import analyze_timing, drc_lite
from .tech import Technology, build_mock65

_LOGIC = (("INV_X1", 0.22), ("NAND2_X1", 0.24), ("NOR2_X1", 0.18), ("AOI21_X1", 0.12),
          ("XOR2_X1", 0.08), ("BUF_X1", 0.04), ("DFF_X1", 0.12))
_FILL = ("FILL8", "FILL4", "FILL2", "FILL1")


class GenerationError(ValueError):
    pass


@dataclass
class GenSpec:
    seed: int = 1
    rows: int = 8
    sites: int = 64
    utilization: float = 0.8
    asset_fraction: float = 0.1
    clock_fanout: int | None = None  # max clock sinks per clock net; None = one net
    big_gap_min: int = 20
    big_gap_max: int = 30
    big_gap_share: float = 0.5  # share of free sites placed in large gaps
    small_gap_max: int = 6
    filler_prob: float = 0.3
    unconnected: int = 0
    n_outputs: int = 4
    margin: int = 1000
    period_margin: float = 1.5
    name: str = "synth"

    def validate(self):
        if not 0 < self.utilization <= 0.98:
            raise GenerationError(f"infeasible utilization {self.utilization}: must be in (0, 0.98]")
        if self.rows < 1 or self.sites < 16:
            raise GenerationError("need at least one row of 16 sites")
        if not 2 <= self.big_gap_min <= self.big_gap_max:
            raise GenerationError("bad large-gap range")
        if self.small_gap_max >= self.big_gap_min:
            raise GenerationError("small gaps must stay below the large-gap minimum")


def _fill_exact(rng, n: int, masters) -> list[str]:
    """Random logic masters whose site widths sum to exactly ``n``."""
    names = [m for m, _ in _LOGIC]
    p = np.array([w for _, w in _LOGIC])
    p = p / p.sum()
    width = {m: masters[m].width // 200 for m in names}
    out = []
    left = n
    while left > 8:
        m = names[rng.choice(len(names), p=p)]
        out.append(m)
        left -= width[m]
    # finish with 2- and 3-site cells
    small = {2: "INV_X1", 3: "NAND2_X1", 4: "AOI21_X1", 5: "XOR2_X1"}
    while left > 0:
        if left in small:
            out.append(small[left])
            left = 0
        elif left == 1:
            # widen the last 2-site cell to 3 sites
            for k in range(len(out) - 1, -1, -1):
                if width.get(out[k]) == 2:
                    out[k] = "NAND2_X1"
                    left = 0
                    break
            else:
                raise GenerationError("cannot fill row exactly")
        else:
            out.append("NAND2_X1" if rng.random() < 0.5 else "INV_X1")
            left -= width[out[-1]]
    rng.shuffle(out)
    return out


def _split_small(rng, total: int, cap: int, slots: int) -> list[int]:
    pieces = []
    while total > 0:
        k = int(min(total, rng.integers(1, cap + 1)))
        pieces.append(k)
        total -= k
    if len(pieces) > slots:
        raise GenerationError("not enough cell boundaries for the free sites")
    return pieces


def _fillers(n: int) -> list[str]:
    out = []
    for f, w in zip(_FILL, (8, 4, 2, 1)):
        while n >= w:
            out.append(f)
            n -= w
    return out


def _place(spec: GenSpec, tech: Technology, rng):
    S, R = spec.sites, spec.rows
    free_total = R * S - int(round(spec.utilization * R * S))
    big = [0] * R
    budget = int(free_total * spec.big_gap_share)
    order = list(rng.permutation(R))
    for r in order:
        if budget < spec.big_gap_min:
            break
        g = int(rng.integers(spec.big_gap_min, spec.big_gap_max + 1))
        g = min(g, budget, S // 2)
        if g < spec.big_gap_min:
            break
        big[r] = g
        budget -= g
    small_total = free_total - sum(big)
    small = [small_total // R + (1 if k < small_total % R else 0) for k in range(R)]
    m = spec.margin
    site_w, row_h = tech.site.width, tech.site.height
    rows = [Row(f"ROW_{k}", m, m + k * row_h, S, site_w, row_h, k % 2 == 1) for k in range(R)]
    placed = []  # (row index, site, master)
    for k in range(R):
        cells = _fill_exact(rng, S - big[k] - small[k], tech.masters)
        slots = len(cells) + 1
        pieces = _split_small(rng, small[k], spec.small_gap_max, slots - (1 if big[k] else 0))
        gap_at = [0] * slots
        boundary = list(rng.permutation(slots))
        if big[k]:
            gap_at[boundary.pop()] = big[k]
        for p, b in zip(pieces, boundary):
            gap_at[b] = p
        site = 0
        for c in range(slots):
            g = gap_at[c]
            if g:
                if rng.random() < spec.filler_prob:
                    s = site
                    for f in _fillers(g):
                        placed.append((k, s, f))
                        s += tech.masters[f].width // site_w
                site += g
            if c < len(cells):
                placed.append((k, site, cells[c]))
                site += tech.masters[cells[c]].width // site_w
        assert site == S
    return rows, placed


def generate(spec: GenSpec, tech: Technology | None = None) -> tuple[Layout, AssetSet, ScoreConfig]:
    spec.validate()
    tech = tech or build_mock65()
    rng = np.random.default_rng(spec.seed)
    rows, placed = _place(spec, tech, rng)
    m = spec.margin
    core_w = spec.sites * tech.site.width
    core_h = spec.rows * tech.site.height
    die = Rect(0, 0, core_w + 2 * m, core_h + 2 * m)
    instances: dict[str, Instance] = {}
    fill_k = 0
    logic = []
    for k, site, master in placed:
        row = rows[k]
        if tech.masters[master].is_filler:
            name = f"f{fill_k:04d}"
            fill_k += 1
        else:
            name = f"u{len(logic):04d}"
            logic.append(name)
        instances[name] = Instance(name, tech.masters[master], row.site_x(site), row.y, row.orient)
    layout = Layout(spec.name, tech, die, rows, instances, {}, {})
    unconnected = set(rng.choice(logic, size=min(spec.unconnected, len(logic)), replace=False)) \
        if spec.unconnected else set()
    _connect(layout, [n for n in logic if n not in unconnected], rng, spec)
    assets = _pick_assets(layout, rng, spec)
    _route(layout)
    t = analyze_timing(layout, ScoreConfig(clock_period=1e9))
    worst = 1e9 - t.wns
    period = float(max(100, math.ceil(spec.period_margin * worst / 10) * 10))
    bad = drc_lite(layout)
    if bad:
        raise GenerationError(f"generated layout has {len(bad)} DRC-lite violations: {bad[0].message}")
    return layout, assets, ScoreConfig(clock_period=period)


def _track(v: int, base: int, pitch: int = 200) -> int:
    return base + round((v - base) / pitch) * pitch


def _connect(layout: Layout, logic: list[str], rng, spec: GenSpec):
    tech = layout.tech
    die = layout.die
    insts = layout.instances
    centre = {n: (insts[n].x + insts[n].master.width // 2, insts[n].y + insts[n].master.height // 2)
              for n in logic}
    order = sorted(logic, key=lambda n: (centre[n][0], centre[n][1], n))
    rank = {n: k for k, n in enumerate(order)}
    nets: dict[str, Net] = {}
    drv_net: dict[str, str] = {}
    fanout: dict[str, int] = {n: 0 for n in logic}
    used_y: dict[str, set] = {"L": set(), "R": set()}
    io_pins: dict[str, IOPin] = {}
    x_left = die.lo_x + 100
    x_right = die.lo_x + 100 + ((die.hi_x - die.lo_x - 100 - 1) // 200) * 200

    def io_y(side, y):
        y = _track(y, die.lo_y + 100)
        step = 0
        while True:
            for cand in (y + step, y - step):
                if die.lo_y + 100 <= cand < die.hi_y and cand not in used_y[side]:
                    used_y[side].add(cand)
                    return cand
            step += 200

    def new_input(y):
        name = f"in{len([p for p in io_pins if p.startswith('in')])}"
        py = io_y("L", y)
        net = Net(f"n_{name}", "signal", [(IO, name)])
        nets[net.name] = net
        io_pins[name] = IOPin(name, net.name, "input", "M3", Rect(-50, -50, 50, 50), x_left, py)
        return net

    def out_net(driver):
        if driver not in drv_net:
            m = insts[driver].master
            net = Net(f"n{len(drv_net):04d}", "signal", [(driver, m.output_pins[0].name)])
            nets[net.name] = net
            drv_net[driver] = net.name
        return nets[drv_net[driver]]

    win_x, win_y = 12 * tech.site.width, 2 * tech.site.height
    for n in order:
        m = insts[n].master
        cx, cy = centre[n]
        for p in m.input_pins:
            if p.use == "clock":
                continue
            cands = []
            for d in order[max(0, rank[n] - 40):rank[n]]:
                if fanout[d] >= 4 or abs(centre[d][0] - cx) > win_x or abs(centre[d][1] - cy) > win_y:
                    continue
                if d in drv_net and any(ref[0] == n for ref in nets[drv_net[d]].pins):
                    continue
                cands.append(d)
            if cands and rng.random() < 0.9:
                fresh = [d for d in cands if fanout[d] == 0]
                pool = fresh or cands
                d = pool[int(rng.integers(len(pool)))]
                net = out_net(d)
                fanout[d] += 1
            else:
                near = [nets[io_pins[q].net] for q in io_pins if q.startswith("in")
                        and abs(io_pins[q].y - cy) <= win_y and len(nets[io_pins[q].net].pins) < 4]
                net = near[0] if near and rng.random() < 0.5 else new_input(cy)
            net.pins.append((n, p.name))
    # primary outputs for the rightmost cells without fanout
    dangling = [n for n in reversed(order) if fanout[n] == 0]
    for k, n in enumerate(dangling[:spec.n_outputs]):
        name = f"out{k}"
        net = out_net(n)
        io_pins[name] = IOPin(name, net.name, "output", "M3", Rect(-50, -50, 50, 50), x_right,
                              io_y("R", centre[n][1]))
        net.pins.append((IO, name))
    dffs = [n for n in order if insts[n].master.is_sequential]
    group = spec.clock_fanout or max(1, len(dffs))
    chunks = [dffs[k:k + group] for k in range(0, len(dffs), group)]
    for k, chunk in enumerate(chunks):
        name = "clk" if len(chunks) == 1 else f"clk{k}"
        nets[name] = Net(name, "clock", [(IO, name)] + [(d, "CK") for d in chunk])
        mean_x = sum(centre[d][0] for d in chunk) // len(chunk)
        cx = _track(mean_x, die.lo_x + 100)
        while any(p.layer == "M4" and p.x == cx for p in io_pins.values()):
            cx += 200
        io_pins[name] = IOPin(name, name, "input", "M4", Rect(-50, -50, 50, 50), cx, die.lo_y + 100, "clock")
    layout.nets = {k: v for k, v in nets.items() if len(v.pins) >= 2}
    layout.io_pins = {k: v for k, v in io_pins.items() if v.net in layout.nets}


def _pick_assets(layout: Layout, rng, spec: GenSpec) -> AssetSet:
    signal = sorted(n for n, net in layout.nets.items() if net.kind == "signal")
    k = max(1, int(round(spec.asset_fraction * len(signal))))
    io_nets = [n for n in signal if any(i == IO for i, _ in layout.nets[n].pins)]
    chosen = set()
    if io_nets:
        chosen.add(io_nets[int(rng.integers(len(io_nets)))])
    rest = [n for n in signal if n not in chosen]
    chosen.update(rng.choice(rest, size=min(k - len(chosen), len(rest)), replace=False).tolist()
                  if k > len(chosen) and rest else [])
    logic = sorted(n for n, i in layout.instances.items() if not i.master.is_filler)
    dffs = [n for n in logic if layout.instances[n].master.is_sequential]
    kc = max(1, int(round(spec.asset_fraction * len(logic) / 2)))
    pool = dffs if len(dffs) >= kc else logic
    cells = set(rng.choice(pool, size=min(kc, len(pool)), replace=False).tolist()) if pool else set()
    for n in chosen:
        layout.nets[n].is_asset = True
    return AssetSet(frozenset(cells), frozenset(chosen))


def _route(layout: Layout):
    grid = RouteGrid.from_layout(layout)
    names = [l.name for l in layout.tech.routing_layers]
    rules = {}
    for n, net in layout.nets.items():
        want = ("M4", "M5", "M6") if net.kind == "clock" else ("M2", "M3", "M4")
        rules[n] = RouteRule(tuple(x for x in want if x in names) or tuple(names[1:]), selector=n)
    clocks = [n for n, net in layout.nets.items() if net.kind == "clock"]
    try:
        reroute(grid, layout, clocks, rules)
        reroute(grid, layout, [n for n in layout.nets if n not in clocks], rules)
    except RouteError as e:
        raise GenerationError(f"generated netlist could not be routed: {e}") from None
    for net in layout.nets.values():
        net.rule = None


def corpus_spec(k: int, base_seed: int = 1000, **kw) -> GenSpec:
    """Spec for the k-th layout of the standard test corpus (utilization 0.75-0.90)."""
    rng = np.random.default_rng(base_seed + k)
    util = round(float(rng.uniform(0.75, 0.90)), 3)
    params = dict(seed=base_seed + k, utilization=util, name=f"corpus{k:02d}")
    params.update(kw)
    return GenSpec(**params)


def write_bundle(out_dir, layout: Layout, assets: AssetSet, score_cfg: ScoreConfig, stem: str | None = None):
    """Write <stem>.def/.lef/.assets/.cfg into ``out_dir``; returns the paths."""
    from .lefdef import write_assets, write_def, write_lef

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = stem or layout.name
    paths = {"def": out / f"{stem}.def", "lef": out / f"{stem}.lef",
             "assets": out / f"{stem}.assets", "cfg": out / f"{stem}.cfg"}
    paths["def"].write_text(write_def(layout))
    paths["lef"].write_text(write_lef(layout.tech))
    paths["assets"].write_text(write_assets(assets))
    paths["cfg"].write_text(f"clock_period = {score_cfg.clock_period}\n")
    return paths
