"""salsy: layout security scoring and hardening passes for a mock 65 nm flow."""

__version__ = "0.1.0"

from .config import PASS_ORDER, PROFILES, ConfigError, PassConfig, ScoreConfig  # noqa: E402
from .geometry import Rect, rect_union_area, subtract_area  # noqa: E402
from .layout import AssetSet, Instance, Layout, LayoutError, Net, Violation  # noqa: E402
from .lefdef import ParseError, ResolutionError, parse_def, parse_lef, read_layout, write_def, write_lef  # noqa: E402
from .scoring import RawMetrics, ScoreBundle, SubScores, collect_raw, evaluate, score  # noqa: E402
from .secmetrics import exposed_area, find_exploitable_regions, ti_raw  # noqa: E402
from .tech import Technology, build_mock65  # noqa: E402

__all__ = [
    "__version__", "PASS_ORDER", "PROFILES", "ConfigError", "PassConfig", "ScoreConfig", "Rect",
    "rect_union_area", "subtract_area", "AssetSet", "Instance", "Layout", "LayoutError", "Net", "Violation",
    "ParseError", "ResolutionError", "parse_def", "parse_lef", "read_layout", "write_def", "write_lef",
    "RawMetrics", "ScoreBundle", "SubScores", "collect_raw", "evaluate", "score", "exposed_area",
    "find_exploitable_regions", "ti_raw", "Technology", "build_mock65",
]
