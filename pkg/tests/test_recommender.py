from __future__ import annotations

import pytest

import props
from modality_advisor.knowledge_base import KBStore, PatternRecord, ingest_pattern
from modality_advisor.pipeline import assess
from modality_advisor.recommender import (
    Persona,
    TaskProfile,
    aggregate_profile,
    classify,
    format_report,
    render_report,
)
from modality_advisor.scoring import ScoringConfig, SubtaskFeatures, SubtaskScores
from modality_advisor.task_model import Domain, Modality, Subtask, TaskGraph


def _profile(max_ass, max_tds, any_sr, label="Unrelated Thing"):
    sc = SubtaskScores(ass=max_ass, tds=max_tds, sr=any_sr)
    return TaskProfile(
        task_id="p",
        max_ass=max_ass,
        mean_ass=max_ass,
        max_tds=max_tds,
        any_sr=any_sr,
        subtask_count=1,
        max_risk=0,
        domain=Domain.OTHER,
        per_subtask=(("S", sc),),
        labels={"S": label},
    )


def _graph(*ids):
    return TaskGraph("t", tuple(Subtask(i, "do", "x", i, SubtaskFeatures()) for i in ids), ())


class TestAggregate:
    def test_single(self):
        sc = SubtaskScores(0.3, 0.1, False)
        p = aggregate_profile(_graph("A"), {"A": sc}, Domain.OTHER)
        assert p.max_ass == p.mean_ass == 0.3
        assert p.max_tds == 0.1

    def test_two(self):
        p = aggregate_profile(
            _graph("A", "B"), {"A": SubtaskScores(0.3, 0.1, False), "B": SubtaskScores(2.0, 0.78, True)}, Domain.OTHER
        )
        assert p.max_ass == 2.0
        assert p.mean_ass == pytest.approx(1.15)
        assert p.any_sr

    def test_missing_id(self):
        with pytest.raises(ValueError, match="missing=\\['B'\\]"):
            aggregate_profile(_graph("A", "B"), {"A": SubtaskScores(0.3, 0.1, False)}, Domain.OTHER)


class TestClassify:
    cfg = ScoringConfig()

    def test_currency(self):
        assert classify(_profile(0.3, 0.10, False), KBStore(), self.cfg).modality == Modality.LLM_CALL

    def test_meeting_summary(self):
        assert classify(_profile(1.0, 0.35, False), KBStore(), self.cfg).modality == Modality.AI_ASSISTANT

    def test_travel(self):
        assert classify(_profile(2.0, 0.78, True), KBStore(), self.cfg).modality == Modality.AGENTIC_AI

    def test_promotion_by_tds(self):
        rec = classify(_profile(1.0, 0.7, False), KBStore(), self.cfg)
        assert rec.modality == Modality.AGENTIC_AI
        assert [f.rule for f in rec.rationale] == ["base_band", "promotion"]

    def test_tds_route_can_be_disabled(self):
        rec = classify(_profile(1.0, 0.7, False), KBStore(), self.cfg, use_tds=False)
        assert rec.modality == Modality.AI_ASSISTANT

    def test_promotion_by_sr_only_one_level(self):
        assert classify(_profile(0.2, 0.7, True), KBStore(), self.cfg).modality == Modality.AI_ASSISTANT

    def test_rationale_ends_with_outcome(self):
        rec = classify(_profile(1.0, 0.7, True), KBStore(), self.cfg)
        assert rec.rationale[-1].outcome == rec.modality.name


def _kb_with(majority: Modality, n=4, success=0.9):
    rec = PatternRecord(
        "p.fetch_status", "Fetch Status", success_rate=success, observed_modality_counts={majority: n}
    )
    return ingest_pattern(KBStore(), rec)


class TestKnowledgeFeedback:
    cfg = ScoringConfig()

    def test_borderline_profile_follows_history(self):
        rec = classify(_profile(0.6, 0.1, False, "Fetch Status"), _kb_with(Modality.LLM_CALL), self.cfg)
        assert rec.modality == Modality.LLM_CALL
        assert rec.rationale[-1].rule == "kb_feedback"

    def test_disabled_feedback_is_advisory(self):
        rec = classify(_profile(0.6, 0.1, False, "Fetch Status"), _kb_with(Modality.LLM_CALL), self.cfg, use_feedback=False)
        assert rec.modality == Modality.AI_ASSISTANT
        assert rec.rationale[-1].rule == "kb_advisory"

    def test_far_from_edges_is_advisory(self):
        rec = classify(_profile(1.0, 0.1, False, "Fetch Status"), _kb_with(Modality.LLM_CALL), self.cfg)
        assert rec.modality == Modality.AI_ASSISTANT

    @pytest.mark.parametrize("n,success", [(2, 0.9), (5, 0.3)])
    def test_thin_or_failing_history_is_advisory(self, n, success):
        rec = classify(_profile(0.6, 0.1, False, "Fetch Status"), _kb_with(Modality.LLM_CALL, n, success), self.cfg)
        assert rec.modality == Modality.AI_ASSISTANT

    def test_never_above_base_plus_one(self):
        # base LLM_CALL, promoted to AI_ASSISTANT; history says agent but that would be base+2
        rec = classify(_profile(0.45, 0.7, False, "Fetch Status"), _kb_with(Modality.AGENTIC_AI), self.cfg)
        assert rec.modality == Modality.AI_ASSISTANT


def test_promotion_cap_random_profiles(seed_kb):
    assert props.promotion_cap(seed_kb, 1000) == []


@pytest.mark.parametrize("kb_name", ["empty", "seed"])
def test_argmax_invariance_random_profiles(seed_kb, kb_name):
    kb = seed_kb if kb_name == "seed" else KBStore()
    assert props.argmax_invariance(kb, 1000) == []


@pytest.fixture(scope="module")
def travel(fixtures, lexicon, seed_kb):
    return assess(fixtures["T03"], ScoringConfig(), seed_kb, lexicon)


class TestReports:
    def test_developer(self, travel, seed_kb):
        r = render_report(travel.recommendation, travel.profile, Persona.DEVELOPER, seed_kb)
        assert len(r["scores"]["subtasks"]) == 4
        tools = {t for entry in r["tool_recommendations"] for t in entry["tools"]}
        assert {"flight_search_api", "hotel_booking_api"} <= tools
        assert r["sr_hooks"]

    def test_manager(self, travel, seed_kb):
        r = render_report(travel.recommendation, travel.profile, Persona.MANAGER, seed_kb)
        assert r["modality"] == "AGENTIC_AI"
        assert r["risk"] == "High"
        assert "subtasks" not in r["scores"]
        assert r["cost_band"] == "High"

    def test_empty_kb_omits_tools_only(self, travel, seed_kb):
        with_kb = render_report(travel.recommendation, travel.profile, Persona.DEVELOPER, seed_kb)
        without = render_report(travel.recommendation, travel.profile, Persona.DEVELOPER, KBStore())
        assert "tool_recommendations" not in without
        with_kb.pop("tool_recommendations")
        assert with_kb == without

    def test_text_rendering(self, travel, seed_kb):
        text = format_report(render_report(travel.recommendation, travel.profile, Persona.MANAGER, seed_kb))
        assert text.startswith("Task T03: AGENTIC_AI (manager view)")
        assert "Decision trace:" in text
