"""Scoring and pass configuration records."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

PASS_ORDER = (
    "ndr_cts",
    "layer_targeted_routing",
    "multicut_vias",
    "edge_cell_placement",
    "intermediate_buffering",
    "cell_flipping",
    "location_based_buffering",
    "final_refinement",
)


class ConfigError(ValueError):
    pass


@dataclass
class ScoreConfig:
    mode: str = "equal"  # "equal" | "percentage"
    w_p: float = 0.1
    w_perf: float = 0.3
    w_area: float = 0.3
    w_drc: float = 0.3
    w_sts: float = 0.6
    w_fts: float = 0.4
    w_ea_c: float = 0.5
    w_ea_n: float = 0.5
    gap_threshold: int = 20
    halo: int = 0  # 0 -> two routing pitches
    clock_period: float = 1000.0  # ps
    activity: float = 0.1
    voltage: float = 1.1
    drc_cap: int = 100

    def __post_init__(self):
        if self.mode not in ("equal", "percentage"):
            raise ConfigError(f"unknown composition mode {self.mode!r}")
        for group in (("w_p", "w_perf", "w_area", "w_drc"), ("w_sts", "w_fts"), ("w_ea_c", "w_ea_n")):
            total = sum(getattr(self, k) for k in group)
            if not math.isclose(total, 1.0, abs_tol=1e-9):
                raise ConfigError(f"weights {', '.join(group)} sum to {total}, expected 1")
        if self.gap_threshold < 2:
            raise ConfigError("gap_threshold must be >= 2")
        if self.clock_period <= 0 or self.drc_cap <= 0:
            raise ConfigError("clock_period and drc_cap must be positive")


PROFILES = {
    "contest": dict(passes=PASS_ORDER, ndr_factor=8.0, ndr_cap=800),
    "tapeout": dict(passes=("ndr_cts", "layer_targeted_routing", "cell_flipping",
                            "location_based_buffering", "final_refinement"),
                    ndr_factor=4.0, ndr_cap=400),
}


@dataclass
class PassConfig:
    passes: tuple[str, ...] = PROFILES["tapeout"]["passes"]
    ndr_factor: float = 4.0
    ndr_cap: int = 400
    asset_layers: tuple[str, ...] = ("M2", "M3")
    other_layers: tuple[str, ...] = ("M4", "M5", "M6")
    other_width_mult: int = 2
    gap_threshold: int = 20
    buffer_master: str = "BUF_X1"
    max_buffers: int = 64
    timing_guard: bool = True
    drc_guard: bool = True
    score_guard: bool = True
    fsp_loop_limit: int = 1
    ti_loop_limit: int = 2
    ti_target: float = 0.05
    fsp_target: float = 0.85
    flip_k: int = 5
    max_shift: int = 4
    edge_radius: int = 40  # sites
    ib_length: int = 6000  # DBU
    lbb_halo: int = 3200  # DBU
    lbb_candidates: int = 6
    via_penalty: int = 2
    nonpref_penalty: int = 10

    def __post_init__(self):
        self.passes = tuple(self.passes)
        self.asset_layers = tuple(self.asset_layers)
        self.other_layers = tuple(self.other_layers)
        unknown = set(self.passes) - set(PASS_ORDER)
        if unknown:
            raise ConfigError(f"unknown passes: {sorted(unknown)}")
        if set(self.asset_layers) & set(self.other_layers):
            raise ConfigError("asset and non-asset layer sets overlap")
        if self.fsp_loop_limit < 1 or self.ti_loop_limit < 1:
            raise ConfigError("loop limits must be >= 1")
        if self.gap_threshold < 2:
            raise ConfigError("gap_threshold must be >= 2")

    @classmethod
    def profile(cls, name: str, **overrides) -> "PassConfig":
        try:
            base = dict(PROFILES[name])
        except KeyError:
            raise ConfigError(f"unknown profile {name!r}") from None
        base.update(overrides)
        return cls(**base)

    def with_(self, **kw) -> "PassConfig":
        return replace(self, **kw)


def coerce(cls, key: str, raw: str):
    """Convert a text value to the declared type of ``cls.key``."""
    for f in fields(cls):
        if f.name != key:
            continue
        default = f.default if f.default is not f.default_factory else None
        if isinstance(default, bool):
            low = raw.strip().lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ConfigError(f"{key}: expected boolean, got {raw!r}")
            return low in ("true", "1", "yes")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            return tuple(p.strip() for p in raw.split(",") if p.strip())
        return raw.strip()
    raise ConfigError(f"unknown key {key!r}")
