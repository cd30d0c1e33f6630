import json
import math

import pytest

import rae_engine as rae


def test_stats_roundtrip():
    r = rae.mann_whitney_u([1, 2, 3], [4, 5, 6])
    assert r["statistic"] == 0.0
    assert r["cles"] == 0.0
    adjusted, rejected = rae.benjamini_hochberg([0.01, 0.02, 0.03, 0.04, 0.05])
    assert adjusted == pytest.approx([0.05] * 5)
    assert all(rejected)
    assert rae.effect_size_r(-10.66, 168) == pytest.approx(0.822, abs=1e-3)


def test_category_probs_sum_to_one():
    p = rae.category_probs([-2.2, -0.8, 0.8, 2.2], 0.3)
    assert len(p) == 5
    assert math.isclose(sum(p), 1.0, rel_tol=1e-12)


def test_policy_floors_and_initiative():
    w = rae.decide("Travel", value="High", experience=5, controls=(4, 4))
    assert w["w_edu"] >= 0.8 and w["w_exp"] >= 0.6 and w["w_aff"] >= 0.7
    assert w["initiative"] == "UserLed"


def test_errors_are_mapped():
    with pytest.raises(rae.RaeError):
        rae.decide("NotADomain")
    with pytest.raises(ValueError):
        rae.spearman([1, 1, 1], [1, 2, 3])


def test_simulate_analyze_calibrate():
    csv = rae.simulate_csv(seed=3)
    assert csv.count("\n") == 1 + 168 * 10 * 3 * 2
    h4 = json.loads(rae.analyze(csv, "h4", seed=3, skip_bayes=True))
    assert h4["hypothesis"] == "h4"
    assert len(h4["tests"]) == 3
    priors = json.loads(rae.published_priors())
    assert priors["schema_version"] == "rae-priors/1"
    text = rae.render_text(rae.published_priors())
    assert "intercepts" in text


def test_flat_baseline_score():
    s = rae.evaluate_policy(kind="flat", seed=2)
    assert s["n"] == 168 * 10 * 2
    assert 0.0 <= s["overall_gap"] <= 1.0
