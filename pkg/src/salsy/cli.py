"""``salsy`` command line: gen, score, secure, diff, render.

Exit codes: 0 ok, 2 input could not be parsed or resolved, 3 guard failure
in the secured output, 4 score regression (relative score above 1).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from .config import ConfigError, PassConfig, ScoreConfig, coerce
from .generate import GenerationError, GenSpec, generate, write_bundle
from .layout import LayoutError
from .lefdef import ParseError, ResolutionError, parse_cfg, read_layout, write_def
from .report import build_report, diff_table, dumps, score_section, validate_report
from .scoring import ScoringError, collect_raw, evaluate
from .tech import TechError

EXIT_OK, EXIT_PARSE, EXIT_GUARD, EXIT_REGRESSION = 0, 2, 3, 4

log = logging.getLogger("salsy")

_INPUT_ERRORS = (ParseError, ResolutionError, LayoutError, ConfigError, TechError, GenerationError,
                 ScoringError, OSError)


def worker_count() -> int:
    """Worker cap from SALSY_THREADS (default: CPU count)."""
    raw = os.environ.get("SALSY_THREADS", "")
    try:
        n = int(raw) if raw.strip() else (os.cpu_count() or 1)
    except ValueError:
        log.warning("ignoring non-integer SALSY_THREADS=%r", raw)
        n = os.cpu_count() or 1
    return max(1, n)


def pmap(fn, items):
    items = list(items)
    n = min(worker_count(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


def _configs(path, profile: str | None = None):
    """(ScoreConfig, PassConfig) from an optional cfg file layered on a profile."""
    if path is None:
        return ScoreConfig(), PassConfig.profile(profile) if profile else PassConfig()
    score_cfg, _, given = parse_cfg(Path(path).read_text())
    pass_kw = {k: coerce(PassConfig, k, v) for k, v in given.items() if k in PassConfig.__dataclass_fields__}
    pass_cfg = PassConfig.profile(profile, **pass_kw) if profile else PassConfig(**pass_kw)
    return score_cfg, pass_cfg


def _emit(report: dict, path) -> None:
    validate_report(report)
    text = dumps(report)
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


# --- commands ----------------------------------------------------------------------

def cmd_gen(args) -> int:
    spec = GenSpec(seed=args.seed, rows=args.rows, sites=args.sites, utilization=args.util,
                   asset_fraction=args.asset_fraction, clock_fanout=args.clock_fanout,
                   unconnected=args.unconnected, name=args.name)
    layout, assets, score_cfg = generate(spec)
    paths = write_bundle(args.out, layout, assets, score_cfg)
    summary = {"seed": spec.seed, "rows": spec.rows, "sites": spec.sites, "utilization": spec.utilization,
               "instances": len(layout.instances), "nets": len(layout.nets),
               "cell_assets": len(assets.cell_assets), "net_assets": len(assets.net_assets),
               "clock_period": score_cfg.clock_period}
    _emit(build_report("gen", layout.name, files=[str(p) for p in paths.values()], summary=summary),
          args.report)
    return EXIT_OK


def cmd_score(args) -> int:
    score_cfg, _ = _configs(args.cfg)
    (base, assets), (sec, _) = pmap(lambda p: read_layout(p, args.lef, args.assets),
                                    [args.baseline, args.secured])
    base_raw, sec_raw = pmap(lambda la: collect_raw(la, assets, score_cfg), [base, sec])
    section = score_section(sec_raw, base_raw, score_cfg)
    _emit(build_report("score", sec.name, base.name, **section), args.report)
    return EXIT_REGRESSION if section["regression"] else EXIT_OK


def cmd_secure(args) -> int:
    from .passes import run_pipeline

    score_cfg, pass_cfg = _configs(args.cfg, args.profile)
    if args.loop_limit is not None:
        pass_cfg = pass_cfg.with_(fsp_loop_limit=args.loop_limit, ti_loop_limit=args.loop_limit)
    layout, assets = read_layout(args.inp, args.lef, args.assets)
    base_path = args.baseline or args.inp
    base = layout.copy() if base_path == args.inp else read_layout(base_path, args.lef)[0]
    base_raw = collect_raw(base, assets, score_cfg)
    res = run_pipeline(layout, assets, base_raw, score_cfg, pass_cfg)
    if args.out:
        Path(args.out).write_text(write_def(res.layout))
    section = score_section(res.raw, base_raw, score_cfg)
    passes = [r.to_dict() for r in res.reports]
    if args.trail:
        trail = build_report("secure", layout.name, base.name, trail=res.trail, passes=passes)
        validate_report(trail)
        Path(args.trail).write_text(dumps(trail))
    _emit(build_report("secure", layout.name, base.name, trail=res.trail, passes=passes, **section),
          args.report)
    guard_ok = (res.raw.wns >= 0 or res.raw.wns >= base_raw.wns) and res.raw.drc_count <= base_raw.drc_count
    if not guard_ok:
        log.error("secured layout fails guards: wns %.1f, drc %d", res.raw.wns, res.raw.drc_count)
        return EXIT_GUARD
    return EXIT_REGRESSION if section["regression"] else EXIT_OK


def cmd_diff(args) -> int:
    score_cfg, _ = _configs(args.cfg)
    base, assets = read_layout(args.baseline, args.lef, args.assets)
    others = pmap(lambda p: read_layout(p, args.lef)[0], args.layouts)
    base_raw = collect_raw(base, assets, score_cfg)
    raws = pmap(lambda la: collect_raw(la, assets, score_cfg), others)
    rows, entries = [], []
    for la, raw in zip(others, raws):
        sub, bundle, rel = evaluate(raw, base_raw, score_cfg)
        rows.append((la.name, sub, bundle, rel))
        entries.append({"design": la.name, "normalized": sub.values(), "aggregate": bundle.to_dict(),
                        "score": rel})
    sys.stderr.write(diff_table(rows))
    _emit(build_report("diff", base.name, base.name, mode=score_cfg.mode, entries=entries), args.report)
    return EXIT_REGRESSION if any(r[3] > 1.0 for r in rows) else EXIT_OK


def cmd_render(args) -> int:
    from .render import render_svg
    from .secmetrics import find_exploitable_regions

    layout, assets = read_layout(args.inp, args.lef, args.assets)
    layers = [x for x in args.layers.split(",") if x] if args.layers else None
    Path(args.out).write_text(render_svg(layout, assets, width_px=args.width, threshold=args.threshold,
                                         layers=layers))
    summary = {"regions": len(find_exploitable_regions(layout, args.threshold)), "svg": str(args.out)}
    _emit(build_report("render", layout.name, files=[str(args.out)], summary=summary), args.report)
    return EXIT_OK


# --- argument parsing --------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="salsy", description="Layout security scoring and hardening.")
    p.add_argument("--version", action="version", version=f"salsy {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, assets=True):
        sp.add_argument("--lef", help="technology LEF (default: built-in mock65)")
        if assets:
            sp.add_argument("--assets", help="asset list file")
        sp.add_argument("--report", help="write report.json here (default: stdout)")

    g = sub.add_parser("gen", help="generate a synthetic placed and routed layout")
    g.add_argument("--seed", type=int, default=1)
    g.add_argument("--rows", type=int, default=8)
    g.add_argument("--sites", type=int, default=64)
    g.add_argument("--util", type=float, default=0.8)
    g.add_argument("--asset-fraction", type=float, default=0.1)
    g.add_argument("--clock-fanout", type=int, default=None)
    g.add_argument("--unconnected", type=int, default=0)
    g.add_argument("--name", default="synth")
    g.add_argument("--out", required=True, help="output directory")
    g.add_argument("--report")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("score", help="score a secured layout against its baseline")
    s.add_argument("--baseline", required=True)
    s.add_argument("--secured", required=True)
    s.add_argument("--cfg")
    common(s)
    s.set_defaults(func=cmd_score)

    c = sub.add_parser("secure", help="run the security pass pipeline")
    c.add_argument("--in", dest="inp", required=True)
    c.add_argument("--baseline", help="baseline DEF (default: the input)")
    c.add_argument("--profile", choices=("contest", "tapeout"), default="tapeout")
    c.add_argument("--cfg")
    c.add_argument("--out", help="secured DEF")
    c.add_argument("--trail", help="per-pass score trail JSON")
    c.add_argument("--loop-limit", type=int, default=None)
    common(c)
    c.set_defaults(func=cmd_secure)

    d = sub.add_parser("diff", help="side-by-side sub-scores of layouts against one baseline")
    d.add_argument("--baseline", required=True)
    d.add_argument("--cfg")
    d.add_argument("layouts", nargs="+")
    common(d)
    d.set_defaults(func=cmd_diff)

    r = sub.add_parser("render", help="static SVG of a layout")
    r.add_argument("--in", dest="inp", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--width", type=int, default=800)
    r.add_argument("--threshold", type=int, default=20)
    r.add_argument("--layers", help="comma-separated routing layers to draw")
    common(r)
    r.set_defaults(func=cmd_render)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except _INPUT_ERRORS as e:
        sys.stderr.write(f"salsy {args.command}: {e}\n")
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
