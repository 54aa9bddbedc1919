"""Task, subtask and dependency-graph types plus structural validation."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping

import networkx as nx

from .scoring import SubtaskFeatures


class Modality(enum.IntEnum):
    """Execution tier for a task. Integer value encodes the total order."""

    LLM_CALL = 0
    AI_ASSISTANT = 1
    AGENTIC_AI = 2

    @classmethod
    def parse(cls, value: "str | int | Modality") -> "Modality":
        if isinstance(value, Modality):
            return value
        if isinstance(value, int):
            return cls(value)
        key = str(value).strip().upper().replace("-", "_")
        aliases = {"LLM": "LLM_CALL", "ASSISTANT": "AI_ASSISTANT", "AGENT": "AGENTIC_AI"}
        key = aliases.get(key, key)
        try:
            return cls[key]
        except KeyError:
            raise ValueError(f"unknown modality {value!r}") from None


class Domain(str, enum.Enum):
    SRE = "SRE"
    COMPLIANCE = "COMPLIANCE"
    AUTOMATION = "AUTOMATION"
    SUPPORT = "SUPPORT"
    OTHER = "OTHER"


class EdgeKind(str, enum.Enum):
    TEMPORAL = "TEMPORAL"
    DATA_FLOW = "DATA_FLOW"


@dataclass(frozen=True)
class TaskDescription:
    """One task to be assessed.

    ``subtask_features`` holds pre-supplied features keyed by subtask label
    (fixture tasks); ``volatile_tools`` is the subset of ``declared_tools``
    whose responses are known to drift.
    """

    id: str
    text: str
    domain: Domain = Domain.OTHER
    declared_tools: tuple[str, ...] = ()
    gold_modality: Modality | None = None
    volatile_tools: tuple[str, ...] = ()
    subtask_features: Mapping[str, SubtaskFeatures] | None = None
    expert_label: Modality | None = None
    notes: str = ""

    def __post_init__(self):
        if not self.id:
            raise ValueError("task id must be nonempty")
        if not self.text or not self.text.strip():
            raise ValueError(f"task {self.id!r}: text must be nonempty")
        unknown = set(self.volatile_tools) - set(self.declared_tools)
        if unknown:
            raise ValueError(f"task {self.id!r}: volatile tools not declared: {sorted(unknown)}")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "TaskDescription":
        tools: list[str] = []
        volatile: list[str] = []
        for entry in data.get("declared_tools", []):
            if isinstance(entry, Mapping):
                tools.append(entry["id"])
                if entry.get("volatile"):
                    volatile.append(entry["id"])
            else:
                tools.append(str(entry))
        feats = data.get("subtask_features")
        gold = data.get("gold_modality")
        expert = data.get("expert_label")
        return cls(
            id=str(data["id"]),
            text=data["text"],
            domain=Domain(data.get("domain", "OTHER")),
            declared_tools=tuple(tools),
            gold_modality=Modality.parse(gold) if gold is not None else None,
            volatile_tools=tuple(volatile),
            subtask_features=(
                {label: SubtaskFeatures.from_dict(f) for label, f in feats.items()}
                if feats is not None
                else None
            ),
            expert_label=Modality.parse(expert) if expert is not None else None,
            notes=data.get("notes", ""),
        )

    def to_dict(self) -> dict[str, Any]:
        tools: list[Any] = [
            {"id": t, "volatile": True} if t in self.volatile_tools else t
            for t in self.declared_tools
        ]
        out: dict[str, Any] = {
            "id": self.id,
            "text": self.text,
            "domain": self.domain.value,
            "declared_tools": tools,
        }
        if self.gold_modality is not None:
            out["gold_modality"] = self.gold_modality.name
        if self.subtask_features is not None:
            out["subtask_features"] = {k: v.to_dict() for k, v in self.subtask_features.items()}
        if self.expert_label is not None:
            out["expert_label"] = self.expert_label.name
        if self.notes:
            out["notes"] = self.notes
        return out


@dataclass(frozen=True)
class Subtask:
    id: str
    action_verb: str
    target_noun: str
    label: str
    features: SubtaskFeatures | None = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("subtask id must be nonempty")
        if not self.action_verb or not self.target_noun:
            raise ValueError(f"subtask {self.id!r}: action_verb and target_noun must be nonempty")


@dataclass(frozen=True)
class DependencyEdge:
    source: str
    target: str
    kind: EdgeKind = EdgeKind.TEMPORAL

    def to_dict(self) -> dict[str, str]:
        return {"from": self.source, "to": self.target, "kind": self.kind.value}


@dataclass(frozen=True)
class TaskGraph:
    task_id: str
    subtasks: tuple[Subtask, ...]
    edges: tuple[DependencyEdge, ...] = ()
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def subtask(self, subtask_id: str) -> Subtask:
        for s in self.subtasks:
            if s.id == subtask_id:
                return s
        raise KeyError(subtask_id)

    def to_dict(self) -> dict[str, Any]:
        return {
            "task_id": self.task_id,
            "subtasks": [
                {
                    "id": s.id,
                    "action_verb": s.action_verb,
                    "target_noun": s.target_noun,
                    "label": s.label,
                }
                for s in self.subtasks
            ],
            "edges": [e.to_dict() for e in self.edges],
            "order": topological_order(self),
            "warnings": list(self.warnings),
        }


@dataclass(frozen=True)
class ValidationResult:
    violations: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


class GraphValidationError(ValueError):
    pass


def validate_graph(graph: TaskGraph) -> ValidationResult:
    """Check every TaskGraph invariant; violations are returned, never raised."""
    violations: list[str] = []
    if not graph.subtasks:
        violations.append("empty graph: at least one subtask required")
    ids = [s.id for s in graph.subtasks]
    seen: set[str] = set()
    for sid in ids:
        if sid in seen:
            violations.append(f"duplicate subtask id {sid}")
        seen.add(sid)

    dag = nx.DiGraph()
    dag.add_nodes_from(seen)
    edge_seen: set[tuple[str, str, EdgeKind]] = set()
    for e in graph.edges:
        key = (e.source, e.target, e.kind)
        if key in edge_seen:
            violations.append(f"duplicate edge {e.source}->{e.target} ({e.kind.value})")
            continue
        edge_seen.add(key)
        if e.source == e.target:
            violations.append(f"self-loop {e.source}")
            continue
        dangling = [x for x in (e.source, e.target) if x not in seen]
        for x in dangling:
            violations.append(f"dangling endpoint {x}")
        if not dangling:
            dag.add_edge(e.source, e.target)

    cycles = sorted(sorted(c) for c in nx.strongly_connected_components(dag) if len(c) > 1)
    violations.extend("cycle: " + ",".join(c) for c in cycles)
    return ValidationResult(tuple(violations))


def topological_order(graph: TaskGraph) -> list[str]:
    """Dependency order; ties resolve by subtask id."""
    result = validate_graph(graph)
    if not result.ok:
        raise GraphValidationError("; ".join(result.violations))
    dag = nx.DiGraph()
    dag.add_nodes_from(s.id for s in graph.subtasks)
    dag.add_edges_from((e.source, e.target) for e in graph.edges)
    return list(nx.lexicographical_topological_sort(dag))


def load_corpus(path: str | Path) -> list[TaskDescription]:
    """Read line-delimited JSON tasks. A lone JSON object or array is accepted too."""
    raw = Path(path).read_text(encoding="utf-8")
    stripped = raw.strip()
    if stripped.startswith("["):
        return [TaskDescription.from_dict(d) for d in json.loads(stripped)]
    tasks = []
    for lineno, line in enumerate(raw.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            if lineno == 1:
                # single pretty-printed object
                try:
                    return [TaskDescription.from_dict(json.loads(raw))]
                except json.JSONDecodeError:
                    pass
            raise ValueError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
        tasks.append(TaskDescription.from_dict(data))
    ids = [t.id for t in tasks]
    dupes = sorted({i for i in ids if ids.count(i) > 1})
    if dupes:
        raise ValueError(f"{path}: duplicate task ids {dupes}")
    return tasks


def dump_corpus(tasks: Iterable[TaskDescription]) -> str:
    return "".join(json.dumps(t.to_dict(), sort_keys=False) + "\n" for t in tasks)
