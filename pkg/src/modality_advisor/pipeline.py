"""End-to-end scoring: decompose, attach features, score, aggregate, classify."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from typing import Any

from .decomposer import DecomposerProvider, DecompositionError, Lexicon, decompose, decompose_via_provider
from .knowledge_base import KBStore
from .recommender import (
    Persona,
    Recommendation,
    TaskProfile,
    aggregate_profile,
    classify,
    render_report,
)
from .scoring import (
    DynamismCoefficients,
    EstimationRules,
    ScoringConfig,
    SubtaskFeatures,
    SubtaskScores,
    estimate_features,
    score_subtask,
)
from .task_model import Subtask, TaskDescription, TaskGraph


@dataclass(frozen=True)
class AblationFlags:
    """Switches that remove one component of the full method. All false is the full method."""

    disable_decomposition: bool = False
    disable_tds: bool = False
    equal_tds_weights: bool = False
    disable_sr: bool = False
    disable_feedback: bool = False

    @classmethod
    def names(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    @classmethod
    def parse(cls, text: str | None) -> "AblationFlags":
        if not text:
            return cls()
        chosen = [s.strip() for s in text.split(",") if s.strip()]
        unknown = sorted(set(chosen) - set(cls.names()))
        if unknown:
            raise ValueError(f"unknown ablation flags {unknown}; expected some of {cls.names()}")
        return cls(**{name: True for name in chosen})

    def active(self) -> list[str]:
        return [name for name in self.names() if getattr(self, name)]

    def label(self) -> str:
        return "+".join(self.active()) or "full"


NO_ABLATION = AblationFlags()


def attach_features(
    graph: TaskGraph, task: TaskDescription, rules: EstimationRules | None = None
) -> TaskGraph:
    """Give every subtask a feature vector: fixture features by label, else rule estimates."""
    supplied = task.subtask_features
    if supplied is not None:
        labels = {s.label for s in graph.subtasks}
        unmatched = sorted(set(supplied) - labels)
        missing = sorted(labels - set(supplied))
        if unmatched or missing:
            raise DecompositionError(
                f"task {task.id}: fixture features do not match decomposition "
                f"(unmatched={unmatched}, missing={missing})"
            )
        subs = tuple(replace(s, features=supplied[s.label]) for s in graph.subtasks)
    else:
        subs = tuple(
            replace(
                s,
                features=estimate_features(
                    s.action_verb,
                    task.text,
                    task.declared_tools,
                    task.volatile_tools,
                    task.domain.value,
                    rules,
                ),
            )
            for s in graph.subtasks
        )
    return replace(graph, subtasks=subs)


def collapse_graph(graph: TaskGraph) -> TaskGraph:
    """Single-subtask view of a graph; features are element-wise maxima."""
    if len(graph.subtasks) == 1:
        return graph
    feats = SubtaskFeatures.elementwise_max(s.features for s in graph.subtasks)
    whole = Subtask(
        id="WholeTask",
        action_verb="handle",
        target_noun="task",
        label=" / ".join(s.label for s in graph.subtasks),
        features=feats,
    )
    return TaskGraph(graph.task_id, (whole,), (), graph.warnings)


def effective_config(config: ScoringConfig, flags: AblationFlags) -> ScoringConfig:
    if not flags.equal_tds_weights:
        return config
    c = config.coeffs
    mean = min((c.alpha + c.beta + c.gamma) / 3.0, 0.5)
    return replace(config, coeffs=DynamismCoefficients(mean, mean, mean))


def score_graph(graph: TaskGraph, config: ScoringConfig, flags: AblationFlags = NO_ABLATION) -> dict[str, SubtaskScores]:
    scores = {}
    for s in graph.subtasks:
        sc = score_subtask(s.features, config)
        if flags.disable_sr:
            sc = replace(sc, sr=False)
        scores[s.id] = sc
    return scores


@dataclass(frozen=True)
class PipelineResult:
    graph: TaskGraph
    profile: TaskProfile
    recommendation: Recommendation

    @property
    def modality(self):
        return self.recommendation.modality


def featured_graph(
    task: TaskDescription,
    lexicon: Lexicon,
    rules: EstimationRules | None = None,
    provider: DecomposerProvider | None = None,
) -> TaskGraph:
    try:
        if provider is None:
            graph = decompose(task, lexicon)
        else:
            graph = decompose_via_provider(task, provider, lexicon)
    except DecompositionError as exc:
        raise DecompositionError(f"task {task.id}: {exc}") from exc
    return attach_features(graph, task, rules)


def assess(
    task: TaskDescription,
    config: ScoringConfig,
    kb: KBStore,
    lexicon: Lexicon,
    flags: AblationFlags = NO_ABLATION,
    rules: EstimationRules | None = None,
    provider: DecomposerProvider | None = None,
) -> PipelineResult:
    graph = featured_graph(task, lexicon, rules, provider)
    if flags.disable_decomposition:
        graph = collapse_graph(graph)
    cfg = effective_config(config, flags)
    scores = score_graph(graph, cfg, flags)
    profile = aggregate_profile(graph, scores, task.domain)
    rec = classify(
        profile,
        kb,
        cfg,
        use_tds=not flags.disable_tds,
        use_feedback=not flags.disable_feedback,
    )
    return PipelineResult(graph, profile, rec)


def run_pipeline(
    task: TaskDescription,
    config: ScoringConfig,
    kb: KBStore,
    lexicon: Lexicon,
    persona: Persona | str = Persona.DEVELOPER,
    rules: EstimationRules | None = None,
    provider: DecomposerProvider | None = None,
) -> dict[str, Any]:
    """Full assessment of one task, rendered as a report document."""
    result = assess(task, config, kb, lexicon, rules=rules, provider=provider)
    return render_report(result.recommendation, result.profile, Persona(persona), kb)
