"""Baseline normalization and score composition."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

from .config import ScoreConfig
from .layout import AssetSet, Layout, Violation
from .quality import analyze_timing, cell_area, drc_lite, power_proxy
from .secmetrics import exposed_area, ti_raw

INF = math.inf


class ScoringError(ValueError):
    pass


@dataclass
class RawMetrics:
    cell_area: int
    power: float
    wns: float
    tns: float
    endpoints: int
    drc_count: int
    sts_sites: int
    fts_tracks: int
    ea_cells: int
    ea_nets: int
    clock_period: float
    asset_key: tuple = ((), ())

    def to_dict(self) -> dict:
        d = asdict(self)
        d["asset_key"] = [list(x) for x in self.asset_key]
        return d


def collect_raw(layout: Layout, assets: AssetSet, cfg: ScoreConfig | None = None) -> RawMetrics:
    cfg = cfg or ScoreConfig()
    t = analyze_timing(layout, cfg)
    sts, fts = ti_raw(layout, cfg.gap_threshold, cfg.halo)
    ex = exposed_area(layout, assets, with_rects=False)
    return RawMetrics(cell_area(layout), power_proxy(layout, cfg), t.wns, t.tns, t.endpoints,
                      len(drc_lite(layout)), sts, fts, ex.cell_total, ex.net_total,
                      cfg.clock_period, assets.key)


@dataclass
class SubScores:
    des_issues: float
    des_perf: float
    des_p_total: float
    des_area: float
    ti_sts: float
    ti_fts: float
    fsp_fi_ea_c: float
    fsp_fi_ea_n: float
    violations: list[Violation] = field(default_factory=list, compare=False)

    NAMES = ("des_issues", "des_perf", "des_p_total", "des_area",
             "ti_sts", "ti_fts", "fsp_fi_ea_c", "fsp_fi_ea_n")

    def values(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in self.NAMES}

    @property
    def finite(self) -> bool:
        return all(math.isfinite(v) for v in self.values().values())


@dataclass
class ScoreBundle:
    des: float
    ti: float
    fsp_fi: float
    overall: float
    security: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def ratio(num: float, den: float) -> float:
    """num/den with 0/0 -> 0 and x/0 -> inf for x > 0."""
    if den == 0:
        return 0.0 if num == 0 else INF
    return num / den


def normalize(secured: RawMetrics, baseline: RawMetrics, cfg: ScoreConfig | None = None) -> SubScores:
    cfg = cfg or ScoreConfig()
    if tuple(map(tuple, secured.asset_key)) != tuple(map(tuple, baseline.asset_key)):
        raise ScoringError("secured and baseline layouts were scored with different asset sets")
    perf_den = secured.endpoints * secured.clock_period
    sub = SubScores(
        des_issues=min(1.0, secured.drc_count / cfg.drc_cap),
        des_perf=max(0.0, -secured.tns / perf_den) if perf_den else 0.0,
        des_p_total=ratio(secured.power, baseline.power),
        des_area=ratio(secured.cell_area, baseline.cell_area),
        ti_sts=ratio(secured.sts_sites, baseline.sts_sites),
        ti_fts=ratio(secured.fts_tracks, baseline.fts_tracks),
        fsp_fi_ea_c=ratio(secured.ea_cells, baseline.ea_cells),
        fsp_fi_ea_n=ratio(secured.ea_nets, baseline.ea_nets),
    )
    for k, v in sub.values().items():
        if math.isinf(v):
            sub.violations.append(Violation("ratio", (k,), f"{k}: nonzero value against a zero baseline"))
    return sub


def aggregate(sub: SubScores, cfg: ScoreConfig | None = None) -> ScoreBundle:
    cfg = cfg or ScoreConfig()
    if cfg.mode == "equal":
        des = (sub.des_issues + sub.des_perf + sub.des_p_total + sub.des_area) / 4
        ti = (sub.ti_sts + sub.ti_fts) / 2
        fsp = (sub.fsp_fi_ea_c + sub.fsp_fi_ea_n) / 2
        sec = (ti + fsp) / 2
        return ScoreBundle(des, ti, fsp, des * sec, sec)
    des = cfg.w_p * sub.des_p_total + cfg.w_perf * sub.des_perf + cfg.w_area * sub.des_area \
        + cfg.w_drc * sub.des_issues
    ti = cfg.w_sts * sub.ti_sts + cfg.w_fts * sub.ti_fts
    fsp = cfg.w_ea_c * sub.fsp_fi_ea_c + cfg.w_ea_n * sub.fsp_fi_ea_n
    return ScoreBundle(des, ti, fsp, des * ti * fsp, ti * fsp)


def score(secured: RawMetrics, baseline: RawMetrics, cfg: ScoreConfig | None = None):
    sub = normalize(secured, baseline, cfg)
    return sub, aggregate(sub, cfg)


def relative_score(bundle: ScoreBundle, reference: ScoreBundle) -> float:
    """Overall score divided by the baseline's self-score (1.0 means no change)."""
    if bundle.overall == reference.overall:
        return 1.0
    return ratio(bundle.overall, reference.overall)


def evaluate(secured: RawMetrics, baseline: RawMetrics, cfg: ScoreConfig | None = None):
    """(SubScores, ScoreBundle, relative score) of ``secured`` against ``baseline``."""
    sub, bundle = score(secured, baseline, cfg)
    _, ref = score(baseline, baseline, cfg)
    return sub, bundle, relative_score(bundle, ref)
