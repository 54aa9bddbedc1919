"""Task profile aggregation, the modality rule cascade and persona-aware reports."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Any, Mapping

from .knowledge_base import KBStore, query_similar
from .scoring import RISK_LEVELS, ScoringConfig, SubtaskScores
from .task_model import Domain, Modality, TaskGraph

KB_SIMILARITY_FLOOR = 0.8
KB_MIN_OBSERVATIONS = 3
KB_MIN_SUCCESS = 0.5

DEFAULT_COSTS: Mapping[Modality, float] = {
    Modality.LLM_CALL: 1.0,
    Modality.AI_ASSISTANT: 3.0,
    Modality.AGENTIC_AI: 10.0,
}


class Persona(str, enum.Enum):
    DEVELOPER = "developer"
    MANAGER = "manager"


@dataclass(frozen=True)
class TaskProfile:
    task_id: str
    max_ass: float
    mean_ass: float
    max_tds: float
    any_sr: bool
    subtask_count: int
    max_risk: int
    domain: Domain
    per_subtask: tuple[tuple[str, SubtaskScores], ...]
    labels: Mapping[str, str] = field(default_factory=dict, compare=False)
    risks: Mapping[str, int] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.subtask_count < 1 or self.subtask_count != len(self.per_subtask):
            raise ValueError("subtask_count must be positive and match per_subtask")

    def to_dict(self) -> dict[str, Any]:
        return {
            "max_ass": self.max_ass,
            "mean_ass": self.mean_ass,
            "max_tds": self.max_tds,
            "any_sr": self.any_sr,
            "subtask_count": self.subtask_count,
            "max_risk": self.max_risk,
        }


def aggregate_profile(
    graph: TaskGraph, scores: Mapping[str, SubtaskScores], domain: Domain
) -> TaskProfile:
    ids = [s.id for s in graph.subtasks]
    missing = sorted(set(ids) - set(scores))
    extra = sorted(set(scores) - set(ids))
    if missing or extra:
        raise ValueError(f"score entries do not match subtasks: missing={missing} extra={extra}")
    per = tuple((sid, scores[sid]) for sid in ids)
    risks = {s.id: (s.features.risk if s.features is not None else 0) for s in graph.subtasks}
    ass = [sc.ass for _, sc in per]
    return TaskProfile(
        task_id=graph.task_id,
        max_ass=max(ass),
        mean_ass=sum(ass) / len(ass),
        max_tds=max(sc.tds for _, sc in per),
        any_sr=any(sc.sr for _, sc in per),
        subtask_count=len(per),
        max_risk=max(risks.values()),
        domain=domain,
        per_subtask=per,
        labels={s.id: s.label for s in graph.subtasks},
        risks=risks,
    )


@dataclass(frozen=True)
class RuleFiring:
    rule: str
    values: Mapping[str, Any]
    outcome: str

    def to_dict(self) -> dict[str, Any]:
        return {"rule": self.rule, "values": dict(self.values), "outcome": self.outcome}


@dataclass(frozen=True)
class Recommendation:
    modality: Modality
    rationale: tuple[RuleFiring, ...]
    kb_evidence: tuple[tuple[str, float], ...]
    config_echo: ScoringConfig

    def __post_init__(self):
        if not self.rationale:
            raise ValueError("rationale must be nonempty")
        if self.rationale[-1].outcome != self.modality.name:
            raise ValueError("modality must match the final rule firing")


def base_band(max_ass: float, band_low: float, band_high: float) -> Modality:
    if max_ass < band_low:
        return Modality.LLM_CALL
    if max_ass < band_high:
        return Modality.AI_ASSISTANT
    return Modality.AGENTIC_AI


def kb_evidence(profile: TaskProfile, kb: KBStore) -> list[tuple[str, float]]:
    """Best match per subtask label, deduplicated and ranked by (similarity desc, id)."""
    best: dict[str, float] = {}
    for sid, _ in profile.per_subtask:
        label = profile.labels.get(sid, sid)
        for rec, sim in query_similar(kb, label, k=1):
            best[rec.pattern_id] = max(best.get(rec.pattern_id, 0.0), sim)
    return sorted(best.items(), key=lambda kv: (-kv[1], kv[0]))


def classify(
    profile: TaskProfile,
    kb: KBStore,
    config: ScoringConfig,
    *,
    use_tds: bool = True,
    use_feedback: bool = True,
) -> Recommendation:
    """Rule cascade: band from max ASS, one-level promotion, then KB feedback.

    The KB step only acts on borderline profiles (max ASS within
    ``config.kb_margin`` band widths of a band edge), only when the closest pattern
    (similarity >= 0.8) has at least three observed deployments with a
    strict-majority modality one level away and a success rate of at least
    0.5, and never lifts the result more than one level above the base band.
    """
    rationale: list[RuleFiring] = []
    base = base_band(profile.max_ass, config.band_low, config.band_high)
    rationale.append(
        RuleFiring(
            "base_band",
            {"max_ass": profile.max_ass, "band_low": config.band_low, "band_high": config.band_high},
            base.name,
        )
    )

    current = base
    tds_fires = use_tds and profile.max_tds >= config.tds_promote
    if (tds_fires or profile.any_sr) and base < Modality.AGENTIC_AI:
        current = Modality(base + 1)
        triggers = {"any_sr": profile.any_sr}
        if use_tds:
            triggers |= {"max_tds": profile.max_tds, "tds_promote": config.tds_promote}
        rationale.append(RuleFiring("promotion", triggers, current.name))

    evidence = kb_evidence(profile, kb)
    if evidence and evidence[0][1] >= KB_SIMILARITY_FLOOR:
        top_id, top_sim = evidence[0]
        rec = kb.get(top_id)
        majority = rec.majority_modality()
        if majority is not None and abs(majority - current) == 1:
            # Margin is relative to the band width so that scaling max_ass and both
            # edges together never changes the outcome.
            margin = config.kb_margin * (config.band_high - config.band_low)
            borderline = min(
                abs(profile.max_ass - config.band_low), abs(profile.max_ass - config.band_high)
            ) <= margin
            eligible = (
                use_feedback
                and borderline
                and rec.total_observations >= KB_MIN_OBSERVATIONS
                and rec.success_rate >= KB_MIN_SUCCESS
                and majority <= base + 1
            )
            values = {
                "pattern_id": top_id,
                "similarity": top_sim,
                "majority": majority.name,
                "observations": rec.total_observations,
                "success_rate": rec.success_rate,
                "borderline": borderline,
            }
            if eligible:
                current = majority
                rationale.append(RuleFiring("kb_feedback", values, current.name))
            else:
                rationale.append(RuleFiring("kb_advisory", values, current.name))

    if rationale[-1].outcome != current.name:
        rationale.append(RuleFiring("final", {}, current.name))
    return Recommendation(current, tuple(rationale), tuple(evidence), config)


# -- reports -----------------------------------------------------------------


def cost_band(modality: Modality, costs: Mapping[Modality, float] = DEFAULT_COSTS) -> str:
    ranked = sorted(costs.values())
    idx = ranked.index(costs[modality])
    return ("Low", "Medium", "High")[min(idx, 2)]


_SUMMARY = {
    Modality.LLM_CALL: "a single stateless model call is sufficient; no orchestration or memory is needed",
    Modality.AI_ASSISTANT: "a guided assistant with session context covers the workflow; full autonomy adds cost without benefit",
    Modality.AGENTIC_AI: "the workflow needs autonomous planning, tool orchestration and mid-course correction",
}


def _manager_paragraph(rec: Recommendation, profile: TaskProfile) -> str:
    parts = [f"Recommended modality: {rec.modality.name}; {_SUMMARY[rec.modality]}."]
    parts.append(
        f"The most demanding of {profile.subtask_count} subtask(s) scores {profile.max_ass:.2f} "
        f"for agentic suitability and {profile.max_tds:.2f} for workflow dynamism."
    )
    if profile.any_sr:
        parts.append("At least one step needs self-reflection hooks such as re-planning or error recovery.")
    if any(f.rule == "kb_feedback" for f in rec.rationale):
        parts.append("Deployment history for a closely matching pattern adjusted the tier.")
    return " ".join(parts)


def render_report(
    rec: Recommendation,
    profile: TaskProfile,
    persona: Persona,
    kb: KBStore,
    costs: Mapping[Modality, float] = DEFAULT_COSTS,
) -> dict[str, Any]:
    """Machine-readable report; :func:`format_report` renders the same content as text."""
    persona = Persona(persona)
    report: dict[str, Any] = {
        "task_id": profile.task_id,
        "modality": rec.modality.name,
        "rationale": [f.to_dict() for f in rec.rationale],
        "persona": persona.value,
        "scores": profile.to_dict(),
        "config_echo": rec.config_echo.to_dict(),
        "kb_evidence": [{"pattern_id": pid, "similarity": sim} for pid, sim in rec.kb_evidence],
    }
    if persona is Persona.DEVELOPER:
        report["scores"]["subtasks"] = [
            {"id": sid, "label": profile.labels.get(sid, sid), **sc.to_dict()}
            for sid, sc in profile.per_subtask
        ]
        report["sr_hooks"] = [
            {"subtask": sid, "hooks": ["error_recovery", "re_planning", "react_loop"]}
            for sid, sc in profile.per_subtask
            if sc.sr
        ]
        tools: list[dict[str, Any]] = []
        for pid, _ in rec.kb_evidence:
            record = kb.records.get(pid)
            if record is not None and record.tool_recommendations:
                tools.append({"pattern_id": pid, "tools": list(record.tool_recommendations)})
        if tools:
            report["tool_recommendations"] = tools
    else:
        report["summary"] = _manager_paragraph(rec, profile)
        report["risk"] = RISK_LEVELS[profile.max_risk]
        report["cost_band"] = cost_band(rec.modality, costs)
        report["relative_cost"] = costs[rec.modality]
    return report


def format_report(report: Mapping[str, Any]) -> str:
    lines = [
        f"Task {report['task_id']}: {report['modality']} ({report['persona']} view)",
    ]
    if "summary" in report:
        lines += [
            "",
            report["summary"],
            f"Risk: {report['risk']}   Cost band: {report['cost_band']} (x{report['relative_cost']:g})",
        ]
    s = report["scores"]
    lines += [
        "",
        f"max ASS {s['max_ass']:.2f}  mean ASS {s['mean_ass']:.2f}  max TDS {s['max_tds']:.2f}  "
        f"self-reflection {'yes' if s['any_sr'] else 'no'}",
    ]
    for row in s.get("subtasks", []):
        lines.append(
            f"  - {row['label']:<32} ASS {row['ass']:.2f}  TDS {row['tds']:.2f}  SR {'yes' if row['sr'] else 'no'}"
        )
    if report.get("sr_hooks"):
        lines.append("Enable reflection hooks on: " + ", ".join(h["subtask"] for h in report["sr_hooks"]))
    for entry in report.get("tool_recommendations", []):
        lines.append(f"Tools ({entry['pattern_id']}): " + ", ".join(entry["tools"]))
    lines.append("")
    lines.append("Decision trace:")
    for firing in report["rationale"]:
        vals = ", ".join(f"{k}={v}" for k, v in firing["values"].items())
        lines.append(f"  {firing['rule']}: {vals} -> {firing['outcome']}")
    if report["kb_evidence"]:
        lines.append(
            "KB evidence: "
            + ", ".join(f"{e['pattern_id']} ({e['similarity']:.2f})" for e in report["kb_evidence"])
        )
    lines.append("Config: " + json.dumps(report["config_echo"], sort_keys=True))
    return "\n".join(lines) + "\n"

