from __future__ import annotations

import json

import numpy as np
import pytest

import props
from modality_advisor.scoring import (
    DynamismCoefficients,
    ScoreWeights,
    ScoringConfig,
    SubtaskFeatures,
    agentic_suitability,
    default_config_path,
    estimate_features,
    load_config,
    score_subtask,
    self_reflection,
    true_dynamism,
)

W = ScoreWeights()
C = DynamismCoefficients()

# Dynamism targets per fixture task, carried by its most dynamic subtask.
TDS_TARGETS = {"T01": 0.10, "T02": 0.35, "T03": 0.78, "T04": 0.85, "T05": 0.80}


def _f(**kw):
    return SubtaskFeatures.from_dict(kw)


class TestAgenticSuitability:
    def test_zero(self):
        assert agentic_suitability(_f(), W) == 0.0

    def test_currency_lookup(self):
        assert agentic_suitability(_f(T=1), W) == pytest.approx(0.3)

    def test_travel_itinerary(self):
        assert agentic_suitability(_f(R=2, T=2, S=2, rho="High"), W) == pytest.approx(2.0)

    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValueError):
            ScoreWeights(0.5, 0.3, 0.2, 0.1)

    def test_unnormalized_weights_rejected_at_scoring(self):
        bad = object.__new__(ScoreWeights)
        object.__setattr__(bad, "r", 1.0)
        for name in ("t", "s", "rho"):
            object.__setattr__(bad, name, 1.0)
        with pytest.raises(ValueError):
            agentic_suitability(_f(R=1), bad)

    def test_normalized(self):
        assert ScoreWeights.normalized(4, 3, 2, 1) == ScoreWeights(0.4, 0.3, 0.2, 0.1)

    @pytest.mark.parametrize("bad", [{"R": 3}, {"T": -1}, {"W": 1.5}, {"M": -0.1}])
    def test_feature_ranges(self, bad):
        with pytest.raises(ValueError):
            _f(**bad)


class TestTrueDynamism:
    def test_zero(self):
        assert true_dynamism(_f(), C) == 0.0

    def test_maximum(self):
        assert true_dynamism(_f(W=1, V=1), C) == pytest.approx(1.0)

    def test_clamped_below(self):
        assert true_dynamism(_f(M=1), C) == 0.0

    def test_coefficient_constraint(self):
        with pytest.raises(ValueError):
            DynamismCoefficients(0.7, 0.4, 0.2)

    @pytest.mark.parametrize("task_id", sorted(TDS_TARGETS))
    def test_fixture_targets(self, fixtures, task_id):
        feats = fixtures[task_id].subtask_features.values()
        assert max(true_dynamism(f, C) for f in feats) == pytest.approx(TDS_TARGETS[task_id], abs=0.05)

    @pytest.mark.parametrize("task_id", sorted(TDS_TARGETS))
    def test_fixture_features_are_min_norm_solution(self, fixtures, task_id):
        # Independent oracle: the minimum-norm (W, V, M) in [0, 1]^3 reaching the target.
        # Unconstrained least squares drives M negative, so M sits on its bound at 0
        # and the remaining two coordinates come from lstsq on (alpha, beta).
        target = TDS_TARGETS[task_id]
        full, *_ = np.linalg.lstsq(np.array([[C.alpha, C.beta, -C.gamma]]), np.array([target]), rcond=None)
        assert full[2] < 0
        wv, *_ = np.linalg.lstsq(np.array([[C.alpha, C.beta]]), np.array([target]), rcond=None)
        feats = max(fixtures[task_id].subtask_features.values(), key=lambda f: true_dynamism(f, C))
        got = (feats.workflow_variability, feats.tool_volatility, feats.model_instability)
        assert got == pytest.approx((wv[0], wv[1], 0.0), abs=1e-6)


class TestSelfReflection:
    def test_currency(self):
        assert self_reflection(_f(), 0.10, 0.5) is False

    def test_kubernetes(self):
        assert self_reflection(_f(C=True), 0.85, 0.5) is True

    def test_needs_a_trigger(self):
        assert self_reflection(_f(), 0.9, 0.5) is False

    def test_range_checked(self):
        with pytest.raises(ValueError):
            self_reflection(_f(), 1.5, 0.5)

    def test_truth_table(self):
        assert props.sr_truth_table() == []


class TestScoreSubtask:
    def test_currency(self, fixtures):
        (feats,) = fixtures["T01"].subtask_features.values()
        s = score_subtask(feats, ScoringConfig())
        assert s.ass == pytest.approx(0.3)
        assert s.tds == pytest.approx(0.10, abs=0.05)
        assert s.sr is False

    def test_travel(self, fixtures):
        feats = fixtures["T03"].subtask_features["Search Flights"]
        s = score_subtask(feats, ScoringConfig())
        assert s.ass == pytest.approx(2.0)
        assert s.tds == pytest.approx(0.78, abs=0.05)
        assert s.sr is True

    def test_zero(self):
        s = score_subtask(_f(), ScoringConfig())
        assert (s.ass, s.tds, s.sr) == (0.0, 0.0, False)

    def test_clamp_is_reported(self):
        s = score_subtask(_f(M=1), ScoringConfig())
        assert s.tds_clamped and s.tds_raw == pytest.approx(-0.2)
        assert s.to_dict()["tds_clamped"] is True


def test_monotonicity_on_random_vectors():
    assert props.monotonicity(1000) == []


class TestConfig:
    def test_shipped_default_matches_dataclass_defaults(self):
        assert load_config(default_config_path()) == ScoringConfig()

    def test_env_override(self, tmp_path, monkeypatch):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"theta": 0.7}))
        monkeypatch.setenv("STRIDE_CONFIG", str(path))
        assert default_config_path() == path
        assert load_config().theta == 0.7

    def test_toml(self, tmp_path):
        path = tmp_path / "c.toml"
        path.write_text("theta = 0.6\n[weights]\nr = 0.25\nt = 0.25\ns = 0.25\nrho = 0.25\n")
        cfg = load_config(path)
        assert cfg.theta == 0.6 and cfg.weights.r == 0.25

    def test_round_trip(self):
        cfg = ScoringConfig(theta=0.3, band_low=0.4)
        assert ScoringConfig.from_dict(cfg.to_dict()) == cfg

    def test_invalid_bands(self):
        with pytest.raises(ValueError):
            ScoringConfig(band_low=1.5, band_high=0.5)


class TestEstimation:
    def test_tool_counts_and_volatility(self):
        f = estimate_features("fetch", "Fetch the status", ("a", "b", "c"), ("a",), "OTHER")
        assert f.tool_need == 2
        assert f.tool_volatility == pytest.approx(0.5)

    def test_domain_risk_default(self):
        assert estimate_features("fetch", "x", (), (), "SRE").risk == 1
        assert estimate_features("fetch", "x", (), (), "SUPPORT").risk == 0

    def test_conditional_cue_raises_variability(self):
        plain = estimate_features("check", "check logs", (), (), "OTHER")
        branchy = estimate_features("check", "check logs and if errors appear escalate", (), (), "OTHER")
        assert branchy.workflow_variability > plain.workflow_variability
