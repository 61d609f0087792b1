"""Acceptance suite: one PASS/FAIL line per criterion, printed at the stated tolerance.

Run with ``pytest tests/test_acceptance.py -v``; the verdict lines are also
collected in the "acceptance" section of the terminal summary.
"""

import json
import time

import numpy as np
import pytest

from builders import make_row_layout, two_pin_layout
from oracles import grid_cost, raster_exposure, random_grid_case, site_runs
from reference_scores import FINAL, STEPS
from salsy.cli import main
from salsy.config import PASS_ORDER, PassConfig, ScoreConfig
from salsy.generate import GenerationError, GenSpec, corpus_spec, generate, write_bundle
from salsy.geometry import Rect
from salsy.gridroute import RouteGrid, route_net
from salsy.layout import AssetSet, Layout, Net, WireSegment
from salsy.lefdef import parse_def, read_layout, write_def
from salsy.passes import PASSES, Session
from salsy.quality import analyze_timing, drc_lite
from salsy.scoring import SubScores, aggregate, collect_raw
from salsy.secmetrics import exposed_area, find_exploitable_regions
from salsy.tech import build_mock65

CORPUS_SIZE = 50


# --- 1. score reconstruction -------------------------------------------------------

def test_score_reconstruction(verdict):
    t0 = time.perf_counter()
    bad = []
    worst = 0.0
    for table in (FINAL, STEPS):
        for name, (comp, printed) in table.items():
            b = aggregate(SubScores(*comp))
            for key, want in zip(("des", "ti", "fsp_fi", "overall"), printed):
                err = abs(getattr(b, key) - want)
                worst = max(worst, err)
                if err > 0.001 + 1e-12:
                    bad.append(f"{name}.{key} {getattr(b, key):.4f} vs {want}")
    dt = time.perf_counter() - t0
    ok = not bad and dt < 1.0
    detail = f"{sum(4 for t in (FINAL, STEPS) for _ in t)} entries, max err {worst:.4f}, {dt:.3f} s"
    if bad:
        detail += "; off by more than 0.001: " + "; ".join(bad)
    verdict(1, "score reconstruction", ok, detail)
    assert ok, detail


# --- 2. region oracle --------------------------------------------------------------

def _random_row(rng, max_sites=1000):
    segs, total = [], 0
    limit = int(rng.integers(20, max_sites + 1))
    while True:
        kind = str(rng.choice(["free", "filler", "unconnected", "connected"], p=[0.3, 0.2, 0.1, 0.4]))
        w = int(rng.integers(1, 16)) * 2
        if total + w > limit:
            break
        segs.append((kind, w))
        total += w
    return segs


def _row_mask(segs, width):
    ok = []
    for kind, w in segs:
        ok.extend([kind != "connected"] * w)
    return ok + [True] * (width - len(ok))


def test_region_oracle(verdict, tech):
    rng = np.random.default_rng(2024)
    boundary = [[("connected", 2), ("free", 19), ("connected", 2)],
                [("connected", 2), ("free", 20), ("connected", 2)],
                [("connected", 2), ("filler", 9), ("free", 10), ("connected", 2)],
                [("connected", 2), ("unconnected", 10), ("free", 10), ("connected", 2)]]
    rows = boundary + [_random_row(rng) for _ in range(1000 - len(boundary))]
    t0 = time.perf_counter()
    mismatches, checked, found = 0, 0, 0
    for start in range(0, len(rows), 25):
        batch = rows[start:start + 25]
        layout = make_row_layout(tech, batch)
        width = layout.rows[0].site_count
        for threshold in (19, 20):
            got = [(r.row, r.start, r.end) for r in find_exploitable_regions(layout, threshold)]
            want = [(k, s, e) for k, segs in enumerate(batch) for s, e in site_runs(_row_mask(segs, width), threshold)]
            mismatches += got != want
            found += len(got)
            checked += 1
    # the 19/20 boundary itself, on its own layout
    edge = make_row_layout(tech, boundary)
    edge_ok = [(r.row, r.site_count) for r in find_exploitable_regions(edge, 20)] == [(1, 20), (3, 20)] \
        if edge.rows[0].site_count == 24 else False
    dt = time.perf_counter() - t0
    ok = mismatches == 0 and edge_ok and dt < 5.0
    detail = f"{len(rows)} rows, {checked} layout/threshold checks, {found} regions, {mismatches} mismatches, " \
             f"19/20 boundary {'ok' if edge_ok else 'wrong'}, {dt:.2f} s"
    verdict(2, "region oracle", ok, detail)
    assert ok, detail


# --- 3. exposure oracle ------------------------------------------------------------

SCENE = 1200


def _random_seg(rng, layer):
    w = int(rng.integers(1, 11)) * 20
    a, b = sorted(int(v) for v in rng.integers(w, SCENE - w, 2))
    c = int(rng.integers(w, SCENE - w))
    if rng.random() < 0.5:
        return WireSegment(layer, a, c, b, c, w)
    return WireSegment(layer, c, a, c, b, w)


def _scene(rng, tech, n_rects):
    names = [l.name for l in tech.routing_layers]
    layout = Layout("scene", tech, Rect(0, 0, SCENE, SCENE), [], {}, {}, {})
    n_nets = int(rng.integers(3, 30))
    for k in range(n_nets):
        layout.nets[f"n{k}"] = Net(f"n{k}")
    for _ in range(n_rects):
        net = layout.nets[f"n{int(rng.integers(0, n_nets))}"]
        net.route.append(_random_seg(rng, names[int(rng.integers(0, len(names)))]))
    assets = sorted(str(n) for n in rng.choice(list(layout.nets), size=int(rng.integers(1, 4)), replace=False))
    return layout, AssetSet(net_assets=frozenset(assets))


def test_exposure_oracle(verdict):
    tech4 = build_mock65(4)
    names = [l.name for l in tech4.routing_layers]
    rng = np.random.default_rng(77)
    t0 = time.perf_counter()
    worst, failures = 0.0, 0
    for _ in range(200):
        layout, assets = _scene(rng, tech4, int(rng.integers(10, 301)))
        got = exposed_area(layout, assets, with_rects=False).net_total
        want = raster_exposure(layout, sorted(assets.net_assets), 0, SCENE)
        err = abs(got - want) / want if want else float(got != 0)
        worst = max(worst, err)
        failures += err > 0.005
    # covering monotonicity: adding metal owned by a non-asset net never raises exposure
    increases, inserts = 0, 0
    while inserts < 10_000:
        layout, assets = _scene(rng, tech4, int(rng.integers(10, 200)))
        layout.nets["cover"] = Net("cover")
        prev = exposed_area(layout, assets, with_rects=False).net_total
        for _ in range(100):
            layout.nets["cover"].route.append(_random_seg(rng, names[int(rng.integers(0, len(names)))]))
            cur = exposed_area(layout, assets, with_rects=False).net_total
            increases += cur > prev
            prev = cur
            inserts += 1
    dt = time.perf_counter() - t0
    ok = failures == 0 and increases == 0 and dt < 60.0
    detail = f"200 scenes, max rel err {worst:.2e}, {failures} over 0.5%; {inserts} insertions, " \
             f"{increases} increases; {dt:.1f} s"
    verdict(3, "exposure oracle", ok, detail)
    assert ok, detail


# --- 4. router completeness and optimality -----------------------------------------

def _layers(tech):
    return [(l.name, l.horizontal) for l in tech.routing_layers]


def _walled_case(rng, tech):
    """Preferred layers M2-M4 fully blocked along one column; pins on M1 either side."""
    nx, ny = int(rng.integers(5, 33)), int(rng.integers(3, 33))
    c = int(rng.integers(1, nx - 1))
    wall = [(l, c, j) for l in ("M2", "M3", "M4") for j in range(ny)]
    a = ("M1", int(rng.integers(0, c)), int(rng.integers(0, ny)))
    b = ("M1", int(rng.integers(c + 1, nx)), int(rng.integers(0, ny)))
    return nx, ny, a, b, wall


def test_router_completeness_and_optimality(verdict):
    tech4 = build_mock65(4)
    layers = _layers(tech4)
    rng = np.random.default_rng(4242)
    t0 = time.perf_counter()
    solved = wrong_cost = wrong_fallback = unblocked = 0
    while solved < 500:
        nx, ny, a, b, obs = random_grid_case(rng, tech4, max_n=32, density=float(rng.uniform(0.0, 0.3)))
        soft = grid_cost(nx, ny, layers, a, b, obs, False)
        if soft is None:
            continue
        hard = grid_cost(nx, ny, layers, a, b, obs, True)
        la = two_pin_layout(tech4, nx, ny, a, b, obs)
        r = route_net(RouteGrid.from_layout(la), la, la.nets["n"])
        solved += 1
        unblocked += hard is not None
        wrong_cost += r.cost != (hard if hard is not None else soft)
        wrong_fallback += r.fallback_used != (hard is None)
    crafted = missed = crafted_cost = 0
    for _ in range(50):
        nx, ny, a, b, wall = _walled_case(rng, tech4)
        assert grid_cost(nx, ny, layers, a, b, wall, True) is None
        la = two_pin_layout(tech4, nx, ny, a, b, wall)
        r = route_net(RouteGrid.from_layout(la), la, la.nets["n"])
        crafted += 1
        missed += not r.fallback_used
        crafted_cost += r.cost != grid_cost(nx, ny, layers, a, b, wall, False)
    dt = time.perf_counter() - t0
    ok = wrong_cost == wrong_fallback == missed == crafted_cost == 0
    detail = f"{solved} solvable grids ({unblocked} with a preferred-layer path), {wrong_cost} cost mismatches, " \
             f"{wrong_fallback} wrong fallback flags; {crafted} walled cases, {missed} without fallback, " \
             f"{crafted_cost} cost mismatches; {dt:.1f} s"
    verdict(4, "router completeness and optimality", ok, detail)
    assert ok, detail


# --- 5 and 8. pipeline on the synthetic corpus ---------------------------------------

@pytest.fixture(scope="module")
def corpus_runs(tmp_path_factory):
    """Run ``salsy secure --profile tapeout`` on every corpus layout; returns per-layout records."""
    root = tmp_path_factory.mktemp("corpus")
    out = []
    t0 = time.perf_counter()
    for k in range(CORPUS_SIZE):
        spec = corpus_spec(k)
        layout, assets, cfg = generate(spec)
        paths = write_bundle(root / spec.name, layout, assets, cfg)
        sec, trail = root / spec.name / "secured.def", root / spec.name / "trail.json"
        files = ["--lef", str(paths["lef"]), "--assets", str(paths["assets"]), "--cfg", str(paths["cfg"])]
        code = main(["secure", "--in", str(paths["def"]), "--profile", "tapeout", "--out", str(sec),
                     "--trail", str(trail), "--report", str(root / spec.name / "report.json"), *files])
        base, _ = read_layout(paths["def"], paths["lef"])
        after, _ = read_layout(sec, paths["lef"])
        b_raw, a_raw = collect_raw(base, assets, cfg), collect_raw(after, assets, cfg)
        out.append(dict(name=spec.name, util=spec.utilization, code=code, base=b_raw, after=a_raw,
                        wns=analyze_timing(after, cfg).wns, drc=len(drc_lite(after)),
                        trail=json.loads(trail.read_text())["trail"]))
    return out, time.perf_counter() - t0


@pytest.mark.slow
def test_pipeline_effect(verdict, corpus_runs):
    runs, dt = corpus_runs
    zero = sum(r["after"].sts_sites == 0 for r in runs)
    grew = [r["name"] for r in runs if r["after"].sts_sites > r["base"].sts_sites]
    not_less = [r["name"] for r in runs
                if r["after"].ea_cells + r["after"].ea_nets >= r["base"].ea_cells + r["base"].ea_nets]
    neg = [r["name"] for r in runs if r["wns"] < 0]
    dirty = [r["name"] for r in runs if r["drc"]]
    codes = sorted({r["code"] for r in runs})
    utils = (min(r["util"] for r in runs), max(r["util"] for r in runs))
    ok = (zero >= 0.9 * len(runs) and not grew and not not_less and not neg and not dirty and dt < 600)
    detail = f"{len(runs)} layouts (util {utils[0]:.3f}-{utils[1]:.3f}), sts=0 on {zero}, sts grew on {grew}, " \
             f"exposure not reduced on {not_less}, wns<0 on {neg}, drc on {dirty}, exit codes {codes}, {dt:.0f} s"
    verdict(5, "pipeline effect", ok, detail)
    assert ok, detail


@pytest.mark.slow
def test_trail_trend(verdict, corpus_runs):
    runs, _ = corpus_runs
    stages = ("ndr_cts", "layer_targeted_routing", "location_based_buffering", "final_refinement")
    bad = []
    for r in runs:
        seq = [e["overall"] for e in r["trail"] if e["stage"] in ("input",) + stages]
        if any(b > a + 1e-12 for a, b in zip(seq, seq[1:])):
            bad.append(r["name"])
        full = [e["overall"] for e in r["trail"]]
        if any(b > a + 1e-12 for a, b in zip(full, full[1:])):
            bad.append(r["name"] + " (full trail)")
    mean = {s: float(np.mean([next(e["overall"] for e in reversed(r["trail"]) if e["stage"] == s)
                              for r in runs])) for s in stages}
    ok = not bad
    detail = "mean overall " + " -> ".join(f"{mean[s]:.3f}" for s in stages) + f"; increases on {bad}"
    verdict(8, "trail trend", ok, detail)
    assert ok, detail


# --- 6. guard and rollback under near-zero slack -----------------------------------------

def _small_design(rng, seed, name, **kw):
    """A small generated design; draws new dimensions until the generator accepts them."""
    while True:
        spec = GenSpec(seed=seed, rows=int(rng.integers(2, 7)), sites=int(rng.integers(40, 80)),
                       utilization=round(float(rng.uniform(0.55, 0.85)), 3), name=name, **kw)
        try:
            return generate(spec)
        except GenerationError:
            continue


def test_guard_rollback(verdict):
    rng = np.random.default_rng(606)
    t0 = time.perf_counter()
    rolled = applied = not_identical = negative = 0
    for k in range(100):
        layout, assets, cfg = _small_design(rng, 5000 + k, f"adv{k}")
        arrival = cfg.clock_period - analyze_timing(layout, cfg).wns
        # slack of 0 to 3 ps: almost any extra delay breaks timing
        tight = ScoreConfig(clock_period=arrival + float(rng.uniform(0.0, 3.0)))
        s = Session(layout, PassConfig.profile("contest"), assets, tight, collect_raw(layout, assets, tight))
        for name in PASS_ORDER:
            before = write_def(layout)
            rep = PASSES[name](s)
            if rep.status == "applied":
                applied += 1
                negative += analyze_timing(layout, tight).wns < 0
            else:
                rolled += rep.status == "rolled_back"
                not_identical += write_def(layout) != before
    dt = time.perf_counter() - t0
    ok = not_identical == 0 and negative == 0
    detail = f"100 configs, {applied} applied passes ({negative} with wns<0), {rolled} rolled back " \
             f"({not_identical} not byte-identical), {dt:.0f} s"
    verdict(6, "guard and rollback", ok, detail)
    assert ok, detail


# --- 7. DEF round trip ---------------------------------------------------------------------

def test_def_round_trip(verdict, tech):
    rng = np.random.default_rng(7)
    t0 = time.perf_counter()
    not_fixpoint = nondeterministic = 0
    for k in range(100):
        layout, _, _ = _small_design(rng, 7000 + k, f"rt{k}", unconnected=int(rng.integers(0, 3)))
        text = write_def(layout)
        nondeterministic += text != write_def(layout) or text != write_def(layout.copy())
        again = write_def(parse_def(text, tech))
        not_fixpoint += again != text
    dt = time.perf_counter() - t0
    ok = not_fixpoint == 0 and nondeterministic == 0
    detail = f"100 generated DEFs, {not_fixpoint} not a fixpoint, {nondeterministic} nondeterministic, {dt:.1f} s"
    verdict(7, "DEF round trip", ok, detail)
    assert ok, detail
