"""scikit-learn style wrappers around scoring and the pass pipeline.

Samples are ``(Layout, AssetSet)`` pairs rather than feature rows, so these
estimators plug into ``get_params``/``set_params``/``clone`` but not into
array-based utilities like ``cross_val_score``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .config import PassConfig, ScoreConfig
from .layout import AssetSet, Layout
from .scoring import SubScores, collect_raw, evaluate


def check_layout(X) -> list[tuple[Layout, AssetSet]]:
    """Normalise ``X`` to a list of (layout, assets) pairs.

    Accepts a bare Layout, a single pair, or a sequence of either.
    """
    if isinstance(X, Layout):
        return [(X, AssetSet())]
    if isinstance(X, tuple) and len(X) == 2 and isinstance(X[0], Layout):
        X = [X]
    try:
        items = list(X)
    except TypeError:
        raise TypeError(f"expected a Layout or (Layout, AssetSet) pairs, got {type(X).__name__}") from None
    out = []
    for i, item in enumerate(items):
        if isinstance(item, Layout):
            item = (item, AssetSet())
        if not (isinstance(item, tuple) and len(item) == 2 and isinstance(item[0], Layout)
                and isinstance(item[1], AssetSet)):
            raise TypeError(f"sample {i}: expected (Layout, AssetSet), got {type(item).__name__}")
        out.append(item)
    if not out:
        raise ValueError("no layouts given")
    return out


def _score_cfg(est) -> ScoreConfig:
    return ScoreConfig(mode=est.mode, gap_threshold=est.gap_threshold, clock_period=est.clock_period)


class SecurityScorer(BaseEstimator):
    """Scores secured layouts against the baselines seen in ``fit``.

    ``transform`` returns the eight normalized sub-scores per sample (columns
    in ``SubScores.NAMES`` order); ``score_samples`` returns the relative
    overall score (1.0 = unchanged, lower is better).
    """

    def __init__(self, mode="equal", gap_threshold=20, clock_period=1000.0):
        self.mode = mode
        self.gap_threshold = gap_threshold
        self.clock_period = clock_period

    def fit(self, X, y=None):
        pairs = check_layout(X)
        cfg = _score_cfg(self)
        self.baseline_raw_ = [collect_raw(lay, a, cfg) for lay, a in pairs]
        self.n_samples_fit_ = len(pairs)
        return self

    def _evaluate(self, X):
        check_is_fitted(self, "baseline_raw_")
        pairs = check_layout(X)
        if len(pairs) != self.n_samples_fit_:
            raise ValueError(f"got {len(pairs)} layouts, fitted on {self.n_samples_fit_} baselines")
        cfg = _score_cfg(self)
        return [evaluate(collect_raw(lay, a, cfg), base, cfg) for (lay, a), base in zip(pairs, self.baseline_raw_)]

    def transform(self, X):
        return np.array([[sub.values()[k] for k in SubScores.NAMES] for sub, _, _ in self._evaluate(X)])

    def score_samples(self, X):
        return np.array([rel for _, _, rel in self._evaluate(X)])

    def get_feature_names_out(self, input_features=None):
        return np.array(SubScores.NAMES, dtype=object)


class SalsyTransformer(TransformerMixin, BaseEstimator):
    """Runs the security pipeline on copies of the input layouts.

    ``fit`` records each sample's baseline raw metrics; ``transform`` returns
    new (layout, assets) pairs and keeps the per-sample PipelineResult in
    ``results_``. The input layouts are never modified.
    """

    def __init__(self, profile="tapeout", passes=None, ti_target=0.05, fsp_target=0.85,
                 score_guard=True, mode="equal", gap_threshold=20, clock_period=1000.0):
        self.profile = profile
        self.passes = passes
        self.ti_target = ti_target
        self.fsp_target = fsp_target
        self.score_guard = score_guard
        self.mode = mode
        self.gap_threshold = gap_threshold
        self.clock_period = clock_period

    def _pass_cfg(self) -> PassConfig:
        kw = dict(ti_target=self.ti_target, fsp_target=self.fsp_target, score_guard=self.score_guard,
                  gap_threshold=self.gap_threshold)
        if self.passes is not None:
            kw["passes"] = tuple(self.passes)
        return PassConfig.profile(self.profile, **kw)

    def fit(self, X, y=None):
        pairs = check_layout(X)
        self._pass_cfg()  # fail early on bad params
        cfg = _score_cfg(self)
        self.baseline_raw_ = [collect_raw(lay, a, cfg) for lay, a in pairs]
        self.n_samples_fit_ = len(pairs)
        return self

    def transform(self, X):
        from .passes import run_pipeline

        check_is_fitted(self, "baseline_raw_")
        pairs = check_layout(X)
        if len(pairs) != self.n_samples_fit_:
            raise ValueError(f"got {len(pairs)} layouts, fitted on {self.n_samples_fit_} baselines")
        cfg, scfg = self._pass_cfg(), _score_cfg(self)
        out, self.results_ = [], []
        for (lay, assets), base in zip(pairs, self.baseline_raw_):
            work = lay.copy()
            res = run_pipeline(work, assets, base, scfg, cfg)
            self.results_.append(res)
            out.append((work, assets))
        return out
