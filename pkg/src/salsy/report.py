"""report.json assembly and schema validation."""

from __future__ import annotations

import json
import math
from importlib import resources

from . import __version__
from .config import ScoreConfig
from .scoring import RawMetrics, ScoreBundle, SubScores, evaluate

SCHEMA_NAME = "report.schema.json"


def _clean(v):
    """JSON-safe copy: non-finite floats become None, tuples become lists."""
    if isinstance(v, float):
        return v if math.isfinite(v) else None
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    return v


RAW_GROUPS = {
    "des": ("cell_area", "power", "wns", "tns", "endpoints", "drc_count", "clock_period"),
    "ti": ("sts_sites", "fts_tracks"),
    "fsp_fi": ("ea_cells", "ea_nets"),
}


def raw_section(raw: RawMetrics) -> dict:
    """Raw metrics grouped as ``des`` / ``ti`` / ``fsp_fi`` plus the asset key."""
    d = raw.to_dict()
    out = {g: {k: d[k] for k in keys} for g, keys in RAW_GROUPS.items()}
    out["assets"] = {"cells": d["asset_key"][0], "nets": d["asset_key"][1]}
    return out


def score_section(secured: RawMetrics, baseline: RawMetrics, cfg: ScoreConfig | None = None) -> dict:
    cfg = cfg or ScoreConfig()
    sub, bundle, rel = evaluate(secured, baseline, cfg)
    return {
        "mode": cfg.mode,
        "raw": raw_section(secured),
        "baseline_raw": raw_section(baseline),
        "normalized": sub.values(),
        "aggregate": bundle.to_dict(),
        "score": rel,
        "regression": bool(rel > 1.0),
        "violations": [{"kind": v.kind, "objects": list(v.objects), "message": v.message} for v in sub.violations],
    }


def build_report(command: str, design: str, baseline_name: str | None = None, **sections) -> dict:
    rep = {"tool": "salsy", "version": __version__, "command": command, "design": design}
    if baseline_name is not None:
        rep["baseline"] = baseline_name
    rep.update(sections)
    return _clean(rep)


def load_schema() -> dict:
    return json.loads(resources.files("salsy").joinpath("data", SCHEMA_NAME).read_text())


def validate_report(report: dict) -> None:
    """Raise jsonschema.ValidationError if ``report`` does not match the shipped schema."""
    import jsonschema

    jsonschema.validate(report, load_schema())


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_report(path, report: dict, validate: bool = True) -> None:
    if validate:
        validate_report(report)
    with open(path, "w") as f:
        f.write(dumps(report))


def diff_table(rows: list[tuple[str, SubScores, ScoreBundle, float]]) -> str:
    """Side-by-side text table of sub-scores for several layouts."""
    names = SubScores.NAMES + ("des", "ti", "fsp_fi", "overall", "score")
    width = max(12, *(len(r[0]) for r in rows)) if rows else 12
    lines = ["metric".ljust(16) + "".join(r[0].rjust(width + 2) for r in rows)]
    for n in names:
        cells = []
        for _, sub, bundle, rel in rows:
            if n in SubScores.NAMES:
                v = getattr(sub, n)
            elif n == "score":
                v = rel
            else:
                v = getattr(bundle, n)
            cells.append(f"{v:.4f}".rjust(width + 2) if math.isfinite(v) else "inf".rjust(width + 2))
        lines.append(n.ljust(16) + "".join(cells))
    return "\n".join(lines) + "\n"
