"""Store of historical subtask patterns with outcome statistics.

Stores are immutable values; every mutation returns a new store whose
version is exactly one higher. Export/import use a JSON document
``{"version": int, "records": [...]}``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from types import MappingProxyType
from typing import Any, Mapping

from .task_model import Domain, Modality


class KBError(ValueError):
    pass


class KBFormatError(KBError):
    """Malformed KB document; the message carries the location."""


def _tokens(label: str) -> frozenset[str]:
    return frozenset(re.findall(r"[a-z0-9]+", label.lower()))


@dataclass(frozen=True)
class PatternRecord:
    pattern_id: str
    canonical_label: str
    domain: Domain = Domain.OTHER
    start_frequency: float = 0.0
    tool_recommendations: tuple[str, ...] = ()
    success_rate: float = 0.0
    observed_modality_counts: Mapping[Modality, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.pattern_id:
            raise KBError("pattern_id must be nonempty")
        for name in ("start_frequency", "success_rate"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise KBError(f"{self.pattern_id}: {name} must lie in [0, 1], got {value}")
        counts = {Modality.parse(k): v for k, v in self.observed_modality_counts.items()}
        for m, c in counts.items():
            if isinstance(c, bool) or not isinstance(c, int) or c < 0:
                raise KBError(f"{self.pattern_id}: count for {m.name} must be a nonnegative integer")
        object.__setattr__(self, "observed_modality_counts", MappingProxyType(dict(sorted(counts.items()))))
        object.__setattr__(self, "tool_recommendations", tuple(self.tool_recommendations))

    @property
    def total_observations(self) -> int:
        return sum(self.observed_modality_counts.values())

    def majority_modality(self) -> Modality | None:
        """Modality with a strict majority of observed deployments, if any."""
        total = self.total_observations
        for m, c in self.observed_modality_counts.items():
            if 2 * c > total:
                return m
        return None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PatternRecord):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __hash__(self) -> int:
        return hash(self.pattern_id)

    def __deepcopy__(self, memo):
        return self

    def to_dict(self) -> dict[str, Any]:
        return {
            "pattern_id": self.pattern_id,
            "canonical_label": self.canonical_label,
            "domain": self.domain.value,
            "start_frequency": self.start_frequency,
            "tool_recommendations": list(self.tool_recommendations),
            "success_rate": self.success_rate,
            "observed_modality_counts": {m.name: c for m, c in self.observed_modality_counts.items()},
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "PatternRecord":
        return cls(
            pattern_id=data["pattern_id"],
            canonical_label=data["canonical_label"],
            domain=Domain(data.get("domain", "OTHER")),
            start_frequency=float(data.get("start_frequency", 0.0)),
            tool_recommendations=tuple(data.get("tool_recommendations", ())),
            success_rate=float(data.get("success_rate", 0.0)),
            observed_modality_counts={
                Modality.parse(k): v for k, v in data.get("observed_modality_counts", {}).items()
            },
        )


@dataclass(frozen=True)
class KBStore:
    records: Mapping[str, PatternRecord] = field(default_factory=dict)
    version: int = 0

    def __post_init__(self):
        object.__setattr__(self, "records", MappingProxyType(dict(self.records)))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, KBStore):
            return NotImplemented
        return self.version == other.version and dict(self.records) == dict(other.records)

    def __len__(self) -> int:
        return len(self.records)

    def __deepcopy__(self, memo):
        return self

    def get(self, pattern_id: str) -> PatternRecord:
        try:
            return self.records[pattern_id]
        except KeyError:
            raise KBError(f"unknown pattern_id {pattern_id!r}") from None


def ingest_pattern(store: KBStore, record: PatternRecord) -> KBStore:
    """Upsert by pattern_id."""
    if not isinstance(record, PatternRecord):
        raise KBError("record must be a PatternRecord")
    records = dict(store.records)
    records[record.pattern_id] = record
    return KBStore(records, store.version + 1)


def jaccard(a: str, b: str) -> float:
    ta, tb = _tokens(a), _tokens(b)
    if not ta and not tb:
        return 0.0
    return len(ta & tb) / len(ta | tb)


def query_similar(store: KBStore, label: str, k: int = 5) -> list[tuple[PatternRecord, float]]:
    """Top-k records by token-set Jaccard similarity of labels; zero-similarity records excluded."""
    if k < 1:
        raise ValueError("k must be >= 1")
    scored = [(rec, jaccard(label, rec.canonical_label)) for rec in store.records.values()]
    scored = [(rec, sim) for rec, sim in scored if sim > 0]
    scored.sort(key=lambda pair: (-pair[1], pair[0].pattern_id))
    return scored[:k]


def record_outcome(store: KBStore, pattern_id: str, deployed: Modality, succeeded: bool) -> KBStore:
    rec = store.get(pattern_id)
    n = rec.total_observations
    counts = dict(rec.observed_modality_counts)
    counts[deployed] = counts.get(deployed, 0) + 1
    rate = (rec.success_rate * n + (1.0 if succeeded else 0.0)) / (n + 1)
    updated = replace(rec, observed_modality_counts=counts, success_rate=rate)
    records = dict(store.records)
    records[pattern_id] = updated
    return KBStore(records, store.version + 1)


def export_kb(store: KBStore) -> str:
    doc = {
        "version": store.version,
        "records": [store.records[pid].to_dict() for pid in sorted(store.records)],
    }
    return json.dumps(doc, indent=2) + "\n"


def import_kb(document: str) -> KBStore:
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise KBFormatError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict) or "version" not in doc or "records" not in doc:
        raise KBFormatError("line 1 column 1: expected an object with 'version' and 'records'")
    records: dict[str, PatternRecord] = {}
    for i, raw in enumerate(doc["records"]):
        try:
            rec = PatternRecord.from_dict(raw)
        except (KeyError, TypeError, ValueError) as exc:
            raise KBFormatError(f"records[{i}]: {exc}") from exc
        if rec.pattern_id in records:
            raise KBFormatError(f"records[{i}]: duplicate pattern_id {rec.pattern_id!r}")
        records[rec.pattern_id] = rec
    version = doc["version"]
    if isinstance(version, bool) or not isinstance(version, int) or version < 0:
        raise KBFormatError("version: expected a nonnegative integer")
    return KBStore(records, version)


def load_kb(path: str | Path | None = None) -> KBStore:
    """Read a KB file; with no path, the shipped seed KB."""
    if path is None:
        text = (resources.files("modality_advisor") / "data" / "seed_kb.json").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return import_kb(text)
