"""Baselines, corpus evaluation and ablation sweeps."""

from __future__ import annotations

import csv
import io
import json
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Any, Mapping, Sequence

from .calibration import accuracy, overengineering_reduction, resource_savings
from .decomposer import Lexicon
from .knowledge_base import KBStore
from .pipeline import NO_ABLATION, AblationFlags, assess, featured_graph
from .recommender import DEFAULT_COSTS
from .scoring import EstimationRules, ScoringConfig, SubtaskFeatures
from .task_model import Modality, TaskDescription

METHODS = ("STRIDE", "NAIVE", "HEURISTIC")


def baseline_naive(task: TaskDescription) -> Modality:
    """Always deploy an agent."""
    return Modality.AGENTIC_AI


def baseline_heuristic(features: SubtaskFeatures) -> Modality:
    """Threshold rule on task-level maxima of reasoning depth and tool need."""
    r, t = features.reasoning_depth, features.tool_need
    if r >= 2 and t >= 2:
        return Modality.AGENTIC_AI
    if r >= 1 or t >= 1:
        return Modality.AI_ASSISTANT
    return Modality.LLM_CALL


@dataclass(frozen=True)
class MetricsRow:
    method: str
    accuracy: float
    overengineering_reduction: float
    resource_savings: float
    per_domain: Mapping[str, float]
    predictions: Mapping[str, str] = field(default_factory=dict)
    expert_agreement: float | None = None


@dataclass(frozen=True)
class MetricsTable:
    rows: tuple[MetricsRow, ...]
    ablation: AblationFlags = NO_ABLATION
    config_echo: Mapping[str, Any] = field(default_factory=dict)

    def row(self, method: str) -> MetricsRow:
        for r in self.rows:
            if r.method == method:
                return r
        raise KeyError(method)

    def to_dict(self) -> dict[str, Any]:
        return {
            "ablation": self.ablation.active(),
            "config_echo": dict(self.config_echo),
            "rows": [
                {
                    "method": r.method,
                    "accuracy": r.accuracy,
                    "overengineering_reduction": r.overengineering_reduction,
                    "resource_savings": r.resource_savings,
                    "per_domain_accuracy": dict(r.per_domain),
                    "expert_agreement": r.expert_agreement,
                    "predictions": dict(r.predictions),
                }
                for r in self.rows
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_csv(self) -> str:
        domains = sorted({d for r in self.rows for d in r.per_domain})
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(
            ["method", "accuracy", "overengineering_reduction", "resource_savings"]
            + [f"accuracy_{d}" for d in domains]
        )
        for r in self.rows:
            w.writerow(
                [r.method, f"{r.accuracy:.4f}", f"{r.overengineering_reduction:.4f}", f"{r.resource_savings:.4f}"]
                + [f"{r.per_domain[d]:.4f}" if d in r.per_domain else "" for d in domains]
            )
        return buf.getvalue()


def predict_method(
    method: str,
    corpus: Sequence[TaskDescription],
    config: ScoringConfig,
    kb: KBStore,
    lexicon: Lexicon,
    flags: AblationFlags = NO_ABLATION,
    rules: EstimationRules | None = None,
) -> list[Modality]:
    method = method.upper()
    if method == "NAIVE":
        return [baseline_naive(t) for t in corpus]
    if method == "HEURISTIC":
        out = []
        for t in corpus:
            graph = featured_graph(t, lexicon, rules)
            out.append(baseline_heuristic(SubtaskFeatures.elementwise_max(s.features for s in graph.subtasks)))
        return out
    if method == "STRIDE":
        return [assess(t, config, kb, lexicon, flags, rules).modality for t in corpus]
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def evaluate(
    corpus: Sequence[TaskDescription],
    config: ScoringConfig,
    kb: KBStore,
    lexicon: Lexicon,
    methods: Sequence[str] = METHODS,
    ablation: AblationFlags = NO_ABLATION,
    cost_model: Mapping[Modality, float] = DEFAULT_COSTS,
    rules: EstimationRules | None = None,
) -> MetricsTable:
    """Score each method against gold labels; NAIVE is the reference for reduction and savings."""
    if not corpus:
        raise ValueError("corpus is empty")
    unlabeled = [t.id for t in corpus if t.gold_modality is None]
    if unlabeled:
        raise ValueError(f"unlabeled tasks in corpus: {unlabeled}")
    gold = [t.gold_modality for t in corpus]
    naive = [baseline_naive(t) for t in corpus]
    rows = []
    for method in methods:
        preds = predict_method(method, corpus, config, kb, lexicon, ablation, rules)
        by_domain: dict[str, list[bool]] = defaultdict(list)
        for t, p in zip(corpus, preds):
            by_domain[t.domain.value].append(p == t.gold_modality)
        expert_pairs = [(p, t.expert_label) for t, p in zip(corpus, preds) if t.expert_label is not None]
        rows.append(
            MetricsRow(
                method=method.upper(),
                accuracy=accuracy(preds, gold),
                overengineering_reduction=overengineering_reduction(preds, gold, naive),
                resource_savings=resource_savings(preds, naive, cost_model),
                per_domain={d: sum(v) / len(v) for d, v in sorted(by_domain.items())},
                predictions={t.id: p.name for t, p in zip(corpus, preds)},
                expert_agreement=(
                    sum(p == e for p, e in expert_pairs) / len(expert_pairs) if expert_pairs else None
                ),
            )
        )
    return MetricsTable(tuple(rows), ablation, config.to_dict())


def ablation_sweep(
    corpus: Sequence[TaskDescription],
    config: ScoringConfig,
    kb: KBStore,
    lexicon: Lexicon,
    cost_model: Mapping[Modality, float] = DEFAULT_COSTS,
    rules: EstimationRules | None = None,
) -> MetricsTable:
    """Full method plus each single ablation, one STRIDE row per configuration."""
    rows = []
    for name in ["full", *AblationFlags.names()]:
        flags = AblationFlags() if name == "full" else AblationFlags(**{name: True})
        table = evaluate(corpus, config, kb, lexicon, ["STRIDE"], flags, cost_model, rules)
        rows.append(replace(table.rows[0], method=name))
    return MetricsTable(tuple(rows), NO_ABLATION, config.to_dict())
