import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from salsy.config import ConfigError
from salsy.estimator import SalsyTransformer, SecurityScorer, check_layout
from salsy.layout import AssetSet
from salsy.lefdef import write_def
from salsy.scoring import SubScores


def test_check_layout_forms(small):
    layout, assets, _ = small
    assert check_layout(layout) == [(layout, AssetSet())]
    assert check_layout((layout, assets)) == [(layout, assets)]
    assert len(check_layout([layout, (layout, assets)])) == 2


def test_check_layout_errors(small):
    layout, _, _ = small
    with pytest.raises(TypeError):
        check_layout(42)
    with pytest.raises(TypeError, match="sample 1"):
        check_layout([layout, "x"])
    with pytest.raises(ValueError):
        check_layout([])


def test_params_and_clone():
    est = SecurityScorer(mode="percentage", gap_threshold=10)
    assert est.get_params() == {"mode": "percentage", "gap_threshold": 10, "clock_period": 1000.0}
    c = clone(est)
    assert c is not est and c.get_params() == est.get_params()
    t = clone(SalsyTransformer(profile="contest", passes=["ndr_cts"]))
    assert t.get_params()["passes"] == ["ndr_cts"]


def test_scorer_on_its_baseline(small):
    layout, assets, cfg = small
    est = SecurityScorer(clock_period=cfg.clock_period).fit([(layout, assets)])
    x = est.transform([(layout, assets)])
    assert x.shape == (1, 8)
    assert list(est.get_feature_names_out()) == list(SubScores.NAMES)
    assert est.score_samples([(layout, assets)]).tolist() == [1.0]


def test_scorer_requires_fit_and_matching_count(small):
    layout, assets, _ = small
    with pytest.raises(NotFittedError):
        SecurityScorer().transform([(layout, assets)])
    est = SecurityScorer().fit([(layout, assets)])
    with pytest.raises(ValueError, match="fitted on 1"):
        est.score_samples([(layout, assets), (layout, assets)])


def test_transformer_leaves_inputs_alone(small):
    layout, assets, cfg = small
    before = write_def(layout)
    t = SalsyTransformer(profile="contest", passes=["ndr_cts", "multicut_vias"], clock_period=cfg.clock_period)
    out = t.fit_transform([(layout, assets)])
    assert write_def(layout) == before
    assert len(out) == 1 and out[0][0] is not layout
    assert len(t.results_) == 1
    scorer = SecurityScorer(clock_period=cfg.clock_period).fit([(layout, assets)])
    assert np.isfinite(scorer.score_samples(out)).all()


def test_transformer_rejects_bad_profile(small):
    layout, assets, _ = small
    with pytest.raises(ConfigError):
        SalsyTransformer(profile="nope").fit([(layout, assets)])
