"""Lexicon-driven task decomposition into a subtask DAG.

The built-in extractor pairs each action verb with the next target noun in
the same clause, canonicalizes both through the lexicon's synonym map and
optionally expands known composite pairs ("plan itinerary") into several
subtasks. Dependencies come from temporal and data-flow cue phrases.
External decomposers plug in through :class:`DecomposerProvider`.
"""

from __future__ import annotations

import abc
import json
import logging
import re
import shlex
import subprocess
import urllib.request
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import networkx as nx

from .task_model import (
    DependencyEdge,
    EdgeKind,
    Subtask,
    TaskDescription,
    TaskGraph,
    validate_graph,
)

log = logging.getLogger(__name__)

FALLBACK_VERB = "respond"
FALLBACK_NOUN = "query"
PAIR_WINDOW = 6

_TOKEN_RE = re.compile(r"[a-z0-9]+(?:['\-][a-z0-9]+)*|[.;:?!]")
_CLAUSE_BREAKS = {".", ";", ":", "?", "!"}


class DecompositionError(ValueError):
    """Raised when a task cannot be turned into a valid graph."""

    def __init__(self, message: str, provider: str | None = None):
        self.provider = provider
        super().__init__(f"[{provider}] {message}" if provider else message)


def _phrase(text: str) -> tuple[str, ...]:
    return tuple(t for t in _TOKEN_RE.findall(text.lower()) if t not in _CLAUSE_BREAKS)


def _norm(text: str) -> str:
    return " ".join(_phrase(text))


@dataclass(frozen=True)
class ExpansionEntry:
    action_verb: str
    target_noun: str
    label: str


@dataclass(frozen=True)
class Lexicon:
    action_verbs: frozenset[str]
    target_nouns: frozenset[str]
    temporal_cues: tuple[str, ...] = ("before", "then", "prior to", "followed by")
    reverse_cues: tuple[str, ...] = ("after", "once", "following")
    data_flow_cues: tuple[str, ...] = ("results inform", "feeds into", "output feeds")
    synonyms: Mapping[str, str] = field(default_factory=dict)
    expansions: Mapping[str, tuple[ExpansionEntry, ...]] = field(default_factory=dict)
    labels: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        for cue in (*self.temporal_cues, *self.reverse_cues, *self.data_flow_cues):
            if not _phrase(cue):
                raise ValueError("cue phrases must be nonempty")
        vocab = self.action_verbs | self.target_nouns
        missing = sorted({c for c in self.synonyms.values() if c not in vocab})
        if missing:
            raise ValueError(f"synonym targets missing from lexicon: {missing}")
        for key, entries in self.expansions.items():
            if len(_phrase(key)) < 2:
                raise ValueError(f"expansion key {key!r} must be 'verb noun'")
            for e in entries:
                if not e.action_verb or not e.target_noun:
                    raise ValueError(f"expansion {key!r} has an empty verb or noun")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Lexicon":
        kwargs: dict[str, Any] = {
            "action_verbs": frozenset(_norm(v) for v in data["action_verbs"]),
            "target_nouns": frozenset(_norm(n) for n in data["target_nouns"]),
            "temporal_cues": tuple(data["temporal_cues"]),
            "synonyms": {_norm(k): _norm(v) for k, v in data.get("synonyms", {}).items()},
        }
        if "reverse_cues" in data:
            kwargs["reverse_cues"] = tuple(data["reverse_cues"])
        if "data_flow_cues" in data:
            kwargs["data_flow_cues"] = tuple(data["data_flow_cues"])
        kwargs["expansions"] = {
            _norm(k): tuple(
                ExpansionEntry(_norm(e["action_verb"]), _norm(e["target_noun"]), e["label"])
                for e in v
            )
            for k, v in data.get("expansions", {}).items()
        }
        kwargs["labels"] = {_norm(k): v for k, v in data.get("labels", {}).items()}
        return cls(**kwargs)

    def to_dict(self) -> dict[str, Any]:
        return {
            "action_verbs": sorted(self.action_verbs),
            "target_nouns": sorted(self.target_nouns),
            "temporal_cues": list(self.temporal_cues),
            "reverse_cues": list(self.reverse_cues),
            "data_flow_cues": list(self.data_flow_cues),
            "synonyms": dict(sorted(self.synonyms.items())),
            "expansions": {
                k: [
                    {"action_verb": e.action_verb, "target_noun": e.target_noun, "label": e.label}
                    for e in v
                ]
                for k, v in sorted(self.expansions.items())
            },
            "labels": dict(sorted(self.labels.items())),
        }

    def canonical(self, word: str) -> str:
        w = _norm(word)
        return self.synonyms.get(w, w)

    def label_for(self, verb: str, noun: str) -> str:
        return self.labels.get(f"{verb} {noun}") or f"{verb.title()} {noun.title()}"


def load_lexicon(path: str | Path | None = None) -> Lexicon:
    if path is None:
        text = (resources.files("modality_advisor") / "data" / "lexicon.json").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return Lexicon.from_dict(json.loads(text))


# -- text scanning ------------------------------------------------------------


@dataclass(frozen=True)
class _Item:
    kind: str  # "verb" | "noun" | "fwd" | "rev" | "flow"
    value: str
    start: int
    end: int  # inclusive
    clause: int


def _scan(text: str, lexicon: Lexicon) -> list[_Item]:
    raw = _TOKEN_RE.findall(text.lower())
    tokens: list[str] = []
    clauses: list[int] = []
    clause = 0
    for tok in raw:
        if tok in _CLAUSE_BREAKS:
            clause += 1
            continue
        tokens.append(tok)
        clauses.append(clause)

    table: dict[tuple[str, ...], tuple[str, str]] = {}
    for cue in lexicon.temporal_cues:
        table[_phrase(cue)] = ("fwd", _norm(cue))
    for cue in lexicon.reverse_cues:
        table[_phrase(cue)] = ("rev", _norm(cue))
    for cue in lexicon.data_flow_cues:
        table[_phrase(cue)] = ("flow", _norm(cue))
    for noun in lexicon.target_nouns:
        table[_phrase(noun)] = ("noun", noun)
    for verb in lexicon.action_verbs:
        table[_phrase(verb)] = ("verb", verb)
    for syn, canon in lexicon.synonyms.items():
        kind = "verb" if canon in lexicon.action_verbs else "noun"
        table[_phrase(syn)] = (kind, canon)
    longest = max((len(k) for k in table), default=1)

    items: list[_Item] = []
    i = 0
    while i < len(tokens):
        for n in range(min(longest, len(tokens) - i), 0, -1):
            key = tuple(tokens[i : i + n])
            if key in table and len(set(clauses[i : i + n])) == 1:
                kind, value = table[key]
                items.append(_Item(kind, value, i, i + n - 1, clauses[i]))
                i += n
                break
        else:
            i += 1
    return items


def _pairs(items: Sequence[_Item]) -> list[tuple[_Item, _Item]]:
    """Pair each verb with the next noun in its clause, before any other verb."""
    out = []
    for idx, item in enumerate(items):
        if item.kind != "verb":
            continue
        for nxt in items[idx + 1 :]:
            if nxt.clause != item.clause or nxt.kind == "verb":
                break
            if nxt.kind == "noun":
                if nxt.start - item.end <= PAIR_WINDOW:
                    out.append((item, nxt))
                break
    return out


def _camel(label: str) -> str:
    words = re.findall(r"[A-Za-z0-9]+", label)
    return "".join(w[:1].upper() + w[1:] for w in words) or "Subtask"


def _assign_ids(triples: Iterable[tuple[str, str, str]]) -> list[Subtask]:
    subtasks: list[Subtask] = []
    used: set[str] = set()
    for verb, noun, label in triples:
        base = _camel(label)
        sid, n = base, 2
        while sid in used:
            sid, n = f"{base}_{n}", n + 1
        used.add(sid)
        subtasks.append(Subtask(id=sid, action_verb=verb, target_noun=noun, label=label))
    return subtasks


def _fallback(description: TaskDescription) -> TaskGraph:
    sub = Subtask(
        id="RespondQuery",
        action_verb=FALLBACK_VERB,
        target_noun=FALLBACK_NOUN,
        label=description.text.strip(),
    )
    return TaskGraph(description.id, (sub,), (), ("no action/target pair matched; task kept atomic",))


def extract_triples(text: str, lexicon: Lexicon) -> list[tuple[str, str, str]]:
    """Canonical (verb, noun, label) triples in text order, duplicates removed."""
    seen: set[tuple[str, str]] = set()
    triples = []
    for verb, noun in _pairs(_scan(text, lexicon)):
        expanded = lexicon.expansions.get(f"{verb.value} {noun.value}")
        entries = (
            [(e.action_verb, e.target_noun, e.label) for e in expanded]
            if expanded
            else [(verb.value, noun.value, lexicon.label_for(verb.value, noun.value))]
        )
        for v, n, label in entries:
            if (v, n) not in seen:
                seen.add((v, n))
                triples.append((v, n, label))
    return triples


# -- dependency inference -----------------------------------------------------


def _mentions(subtask: Subtask, items: Sequence[_Item], lexicon: Lexicon) -> list[tuple[int, int, int]]:
    """Token spans (start, end, clause) of every mention of a subtask in the text.

    A subtask is matched by its own verb-noun pair, else by the composite pair
    it was expanded from, else by its noun alone.
    """
    pairs = _pairs(items)
    spans = [
        (verb.start, noun.end, verb.clause)
        for verb, noun in pairs
        if verb.value == subtask.action_verb and noun.value == subtask.target_noun
    ]
    if spans:
        return spans
    for verb, noun in pairs:
        children = lexicon.expansions.get(f"{verb.value} {noun.value}", ())
        if any(c.action_verb == subtask.action_verb and c.target_noun == subtask.target_noun for c in children):
            spans.append((verb.start, noun.end, verb.clause))
    if spans:
        return spans
    return [(i.start, i.end, i.clause) for i in items if i.kind == "noun" and i.value == subtask.target_noun]


class _EdgeSet:
    """Accumulates edges in emission order, refusing any that would close a cycle."""

    def __init__(self, ids: Iterable[str]):
        self.dag = nx.DiGraph()
        self.dag.add_nodes_from(ids)
        self.edges: list[DependencyEdge] = []
        self.keys: set[tuple[str, str, EdgeKind]] = set()
        self.warnings: list[str] = []

    def add(self, edge: DependencyEdge) -> None:
        key = (edge.source, edge.target, edge.kind)
        if edge.source == edge.target or key in self.keys:
            return
        if nx.has_path(self.dag, edge.target, edge.source):
            msg = f"dropped {edge.kind.value} edge {edge.source}->{edge.target}: would create a cycle"
            log.warning(msg)
            self.warnings.append(msg)
            return
        self.keys.add(key)
        self.dag.add_edge(edge.source, edge.target)
        self.edges.append(edge)


def _infer(subtasks: Sequence[Subtask], text: str, lexicon: Lexicon, edges: _EdgeSet) -> None:
    items = _scan(text, lexicon)
    placed = [(span, s.id) for s in subtasks for span in _mentions(s, items, lexicon)]

    def before(pos: int, clause: int) -> tuple[int, list[str]]:
        """Subtasks whose mention ends closest to the left of pos."""
        cands = [(sp[1], sid) for sp, sid in placed if sp[2] == clause and sp[1] < pos]
        if not cands:
            return pos, []
        last = max(end for end, _ in cands)
        return last, sorted({sid for end, sid in cands if end == last})

    def after(pos: int, clause: int) -> tuple[int, list[str]]:
        """Subtasks whose mention starts closest to the right of pos, plus that mention's end."""
        cands = [(sp[0], sp[1], sid) for sp, sid in placed if sp[2] == clause and sp[0] > pos]
        if not cands:
            return pos, []
        first = min(start for start, _, _ in cands)
        hits = [(end, sid) for start, end, sid in cands if start == first]
        return max(end for end, _ in hits), sorted({sid for _, sid in hits})

    for cue in items:
        if cue.kind not in ("fwd", "rev", "flow"):
            continue
        _, left = before(cue.start, cue.clause)
        end, right = after(cue.end, cue.clause)
        if cue.kind == "flow":
            pairs = [(x, y) for x in left for y in right]
            kind = EdgeKind.DATA_FLOW
        else:
            kind = EdgeKind.TEMPORAL
            if left:
                pairs = [(x, y) for x in left for y in right]
            else:
                # clause-initial cue: "after X, Y" / "before X, Y"
                _, second = after(end, cue.clause) if right else (end, [])
                pairs = [(x, y) for x in right for y in second]
            if cue.kind == "rev" and left:
                pairs = [(y, x) for x, y in pairs]
            elif cue.kind == "fwd" and not left:
                pairs = [(y, x) for x, y in pairs]
        for x, y in pairs:
            edges.add(DependencyEdge(x, y, kind))


def infer_dependencies(
    subtasks: Sequence[Subtask], text: str, lexicon: Lexicon
) -> list[DependencyEdge]:
    """Temporal and data-flow edges between subtasks mentioned in ``text``.

    "X before Y" and "X then Y" give X->Y; "X after Y" gives Y->X; "X results
    inform Y" gives a DATA_FLOW edge X->Y. Edges that would close a cycle
    are dropped in text order, so the later edge loses.
    """
    if not subtasks:
        raise ValueError("need at least one subtask")
    edges = _EdgeSet(s.id for s in subtasks)
    _infer(subtasks, text, lexicon, edges)
    return edges.edges


def _build(
    description: TaskDescription,
    triples: Sequence[tuple[str, str, str]],
    lexicon: Lexicon,
    hints: Sequence[tuple[str, str, EdgeKind]] = (),
    provider: str | None = None,
) -> TaskGraph:
    subtasks = _assign_ids(triples)
    edges = _EdgeSet(s.id for s in subtasks)
    by_ref = {s.id: s.id for s in subtasks} | {s.label: s.id for s in subtasks}
    for src, dst, kind in hints:
        if src not in by_ref or dst not in by_ref:
            raise DecompositionError(f"dependency hint references unknown subtask {src}->{dst}", provider)
        edges.add(DependencyEdge(by_ref[src], by_ref[dst], kind))
    _infer(subtasks, description.text, lexicon, edges)
    graph = TaskGraph(description.id, tuple(subtasks), tuple(edges.edges), tuple(edges.warnings))
    result = validate_graph(graph)
    if not result.ok:
        raise DecompositionError("; ".join(result.violations), provider)
    return graph


def decompose(description: TaskDescription, lexicon: Lexicon) -> TaskGraph:
    """Split a task into subtasks and link them into a DAG."""
    if not description.text or not description.text.strip():
        raise DecompositionError("task text is empty")
    triples = extract_triples(description.text, lexicon)
    if not triples:
        return _fallback(description)
    return _build(description, triples, lexicon)


# -- external providers -------------------------------------------------------


@dataclass(frozen=True)
class ProviderOutput:
    triples: tuple[tuple[str, str, str], ...]
    hints: tuple[tuple[str, str, EdgeKind], ...] = ()

    @classmethod
    def from_json(cls, payload: Any, provider: str) -> "ProviderOutput":
        try:
            triples = tuple(
                (str(s["action_verb"]), str(s["target_noun"]), str(s.get("label") or ""))
                for s in payload["subtasks"]
            )
            hints = tuple(
                (str(d["from"]), str(d["to"]), EdgeKind(d.get("kind", "TEMPORAL")))
                for d in payload.get("dependencies", [])
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DecompositionError(f"malformed provider output: {exc!r}", provider) from exc
        return cls(triples, hints)


class DecomposerProvider(abc.ABC):
    """Source of (verb, noun, label) triples for a task text.

    Implementations must be stateless across calls so that callers can
    issue requests concurrently.
    """

    name: str = "provider"

    @abc.abstractmethod
    def propose(self, text: str) -> ProviderOutput:
        ...


class LexiconProvider(DecomposerProvider):
    name = "lexicon"

    def __init__(self, lexicon: Lexicon):
        self.lexicon = lexicon

    def propose(self, text: str) -> ProviderOutput:
        return ProviderOutput(tuple(extract_triples(text, self.lexicon)))


class CommandProvider(DecomposerProvider):
    """Runs a command, writes ``{"text": ...}`` to stdin and reads the triples JSON from stdout."""

    def __init__(self, command: str | Sequence[str], timeout: float = 30.0):
        self.argv = shlex.split(command) if isinstance(command, str) else list(command)
        self.name = f"cmd:{self.argv[0]}" if self.argv else "cmd"
        self.timeout = timeout

    def propose(self, text: str) -> ProviderOutput:
        try:
            proc = subprocess.run(
                self.argv,
                input=json.dumps({"text": text}),
                capture_output=True,
                text=True,
                timeout=self.timeout,
                check=True,
            )
            payload = json.loads(proc.stdout)
        except (OSError, subprocess.SubprocessError, json.JSONDecodeError) as exc:
            raise DecompositionError(f"provider call failed: {exc}", self.name) from exc
        return ProviderOutput.from_json(payload, self.name)


class HttpProvider(DecomposerProvider):
    """POSTs ``{"text": ...}`` to an endpoint and reads the triples JSON from the response."""

    def __init__(self, url: str, timeout: float = 30.0):
        self.url = url
        self.name = url
        self.timeout = timeout

    def propose(self, text: str) -> ProviderOutput:
        req = urllib.request.Request(
            self.url,
            data=json.dumps({"text": text}).encode(),
            headers={"Content-Type": "application/json"},
            method="POST",
        )
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                payload = json.loads(resp.read().decode())
        except (OSError, json.JSONDecodeError) as exc:
            raise DecompositionError(f"provider call failed: {exc}", self.name) from exc
        return ProviderOutput.from_json(payload, self.name)


def provider_from_uri(uri: str, lexicon: Lexicon | None = None) -> DecomposerProvider:
    """``lexicon`` | ``cmd:<command line>`` | ``http(s)://...``."""
    if uri in ("", "lexicon"):
        return LexiconProvider(lexicon or load_lexicon())
    if uri.startswith("cmd:"):
        return CommandProvider(uri[4:])
    if uri.startswith(("http://", "https://")):
        return HttpProvider(uri)
    raise ValueError(f"unsupported provider uri {uri!r}")


def decompose_via_provider(
    description: TaskDescription,
    provider: DecomposerProvider,
    lexicon: Lexicon | None = None,
) -> TaskGraph:
    """Build a graph from provider triples, validated like the lexicon path."""
    lexicon = lexicon or load_lexicon()
    if not description.text or not description.text.strip():
        raise DecompositionError("task text is empty", provider.name)
    out = provider.propose(description.text)
    if not out.triples:
        graph = _fallback(description)
        msg = f"provider {provider.name} returned no subtasks; task kept atomic"
        log.warning(msg)
        return replace(graph, warnings=(msg,))
    triples = []
    seen: set[tuple[str, str]] = set()
    for verb, noun, label in out.triples:
        if not verb.strip() or not noun.strip():
            raise DecompositionError(f"subtask with empty verb or noun: {(verb, noun, label)!r}", provider.name)
        v, n = lexicon.canonical(verb), lexicon.canonical(noun)
        if (v, n) in seen:
            continue
        seen.add((v, n))
        triples.append((v, n, label or lexicon.label_for(v, n)))
    return _build(description, triples, lexicon, out.hints, provider.name)
