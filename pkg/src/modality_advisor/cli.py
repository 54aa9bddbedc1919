"""Command-line entry point.

Exit codes: 0 success, 1 input error, 2 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any, Sequence

from .calibration import GridSpec, grid_search
from .decomposer import (
    DecomposerProvider,
    DecompositionError,
    LexiconProvider,
    ProviderOutput,
    decompose,
    decompose_via_provider,
    load_lexicon,
    provider_from_uri,
)
from .harness import METHODS, ablation_sweep, evaluate
from .knowledge_base import KBError, export_kb, import_kb, load_kb
from .pipeline import AblationFlags, assess, featured_graph, score_graph
from .recommender import Persona, format_report, render_report
from .scoring import _read_mapping, default_config_path, load_config, load_estimation_rules
from .task_model import TaskDescription, load_corpus
from .validation import check_labeled

log = logging.getLogger("modality_advisor")

EXIT_OK, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2


class InputError(Exception):
    pass


class FallbackProvider(DecomposerProvider):
    """Uses ``primary`` and drops to the lexicon decomposer whenever it fails."""

    def __init__(self, primary: DecomposerProvider, fallback: LexiconProvider):
        self.primary = primary
        self.fallback = fallback
        self.name = primary.name

    def propose(self, text: str) -> ProviderOutput:
        try:
            return self.primary.propose(text)
        except DecompositionError as exc:
            log.warning("%s; falling back to the lexicon decomposer", exc)
            return self.fallback.propose(text)


def _dump(obj: Any) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _tasks(path: str) -> list[TaskDescription]:
    tasks = load_corpus(path)
    if not tasks:
        raise InputError(f"{path}: no tasks found")
    return tasks


def _store_path(args) -> Path:
    return Path(args.store or os.environ.get("STRIDE_KB", "kb.json"))


def _resources(args):
    config_path = Path(args.config) if args.config else default_config_path()
    config = load_config(config_path)
    rules = load_estimation_rules(config_path)
    lexicon = load_lexicon(args.lexicon)
    if args.kb:
        kb = load_kb(args.kb)
    elif _store_path(args).exists():
        kb = load_kb(_store_path(args))
    else:
        kb = load_kb()
    uri = args.provider
    if uri is None:
        uri = _read_mapping(config_path).get("provider", {}).get("uri", "lexicon")
    provider = None
    if uri not in ("", "lexicon"):
        provider = FallbackProvider(provider_from_uri(uri, lexicon), LexiconProvider(lexicon))
    return config, rules, lexicon, kb, provider


def cmd_decompose(args) -> int:
    _, _, lexicon, _, provider = _resources(args)
    graphs = []
    for task in _tasks(args.task_file):
        if provider is None:
            graph = decompose(task, lexicon)
        else:
            graph = decompose_via_provider(task, provider, lexicon)
        graphs.append(graph.to_dict())
    _emit(_dump(graphs), args.out)
    return EXIT_OK


def cmd_score(args) -> int:
    config, rules, lexicon, _, provider = _resources(args)
    out = []
    for task in _tasks(args.task_file):
        graph = featured_graph(task, lexicon, rules, provider)
        scores = score_graph(graph, config)
        out.append(
            {
                "task_id": task.id,
                "subtasks": [
                    {"id": s.id, "label": s.label, "features": s.features.to_dict(), **scores[s.id].to_dict()}
                    for s in graph.subtasks
                ],
                "config_echo": config.to_dict(),
            }
        )
    _emit(_dump(out), args.out)
    return EXIT_OK


def cmd_recommend(args) -> int:
    config, rules, lexicon, kb, provider = _resources(args)
    persona = Persona(args.persona)
    reports = []
    for task in _tasks(args.task_file):
        result = assess(task, config, kb, lexicon, rules=rules, provider=provider)
        reports.append(render_report(result.recommendation, result.profile, persona, kb))
    if args.format == "text":
        _emit("\n".join(format_report(r) for r in reports), args.out)
    else:
        _emit(_dump(reports if len(reports) != 1 else reports[0]), args.out)
    return EXIT_OK


def _parse_methods(text: str) -> list[str]:
    methods = [m.strip().upper() for m in text.split(",") if m.strip()]
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise InputError(f"unknown methods {bad}; expected some of {[m.lower() for m in METHODS]}")
    return methods


def _write_side_by_side(out_dir: str, stem: str, json_text: str, csv_text: str) -> None:
    d = Path(out_dir)
    d.mkdir(parents=True, exist_ok=True)
    (d / f"{stem}.json").write_text(json_text, encoding="utf-8")
    (d / f"{stem}.csv").write_text(csv_text, encoding="utf-8")


def cmd_evaluate(args) -> int:
    config, rules, lexicon, kb, _ = _resources(args)
    corpus = _tasks(args.corpus)
    check_labeled(corpus)
    if args.sweep:
        table = ablation_sweep(corpus, config, kb, lexicon, rules=rules)
        stem = "ablations"
    else:
        table = evaluate(
            corpus, config, kb, lexicon, _parse_methods(args.methods), AblationFlags.parse(args.ablate), rules=rules
        )
        stem = "metrics"
    if args.out_dir:
        _write_side_by_side(args.out_dir, stem, table.to_json(), table.to_csv())
    sys.stdout.write(table.to_csv())
    return EXIT_OK


def cmd_calibrate(args) -> int:
    config, rules, lexicon, kb, _ = _resources(args)
    corpus = _tasks(args.corpus)
    check_labeled(corpus)
    grid = GridSpec.load(args.grid)
    result = grid_search(corpus, grid, kb, lexicon, base=config, rules=rules)
    if args.out_dir:
        _write_side_by_side(args.out_dir, "calibration", _dump(result.to_dict()), result.trace_csv())
    sys.stdout.write(_dump(result.to_dict()))
    return EXIT_OK


def cmd_kb(args) -> int:
    store_path = _store_path(args)
    if args.action == "import":
        store = import_kb(Path(args.file).read_text(encoding="utf-8"))
        store_path.write_text(export_kb(store), encoding="utf-8")
        log.info("imported %d records (version %d) into %s", len(store), store.version, store_path)
    else:
        store = load_kb(store_path) if store_path.exists() else load_kb()
        Path(args.file).write_text(export_kb(store), encoding="utf-8")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scoring config (JSON or TOML); default $STRIDE_CONFIG or the shipped default")
    common.add_argument("--kb", help="knowledge-base file to read")
    common.add_argument("--store", help="KB store used by 'kb import/export' (default $STRIDE_KB or ./kb.json)")
    common.add_argument("--lexicon", help="lexicon JSON file")
    common.add_argument("--provider", help="decomposer provider uri: lexicon | cmd:<command> | http(s)://...")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="modality-advisor", description=__doc__, parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", parents=[common], help="print the subtask DAG of each task")
    p.add_argument("task_file")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("score", parents=[common], help="print per-subtask scores")
    p.add_argument("task_file")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("recommend", parents=[common], help="recommend a modality per task")
    p.add_argument("task_file")
    p.add_argument("--persona", choices=[x.value for x in Persona], default="developer")
    p.add_argument("--format", choices=["json", "text"], default="json")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_recommend)

    p = sub.add_parser("evaluate", parents=[common], help="compare methods on a labeled corpus")
    p.add_argument("corpus")
    p.add_argument("--methods", default="stride,naive,heuristic")
    p.add_argument("--ablate", default="", help=f"comma-separated subset of {AblationFlags.names()}")
    p.add_argument("--sweep", action="store_true", help="full method plus every single ablation")
    p.add_argument("--out-dir", help="write metrics.json and metrics.csv here")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("calibrate", parents=[common], help="grid-search the scoring config")
    p.add_argument("corpus")
    p.add_argument("--grid", required=True)
    p.add_argument("--out-dir", help="write calibration.json and calibration.csv here")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("kb", parents=[common], help="import or export the knowledge base")
    p.add_argument("action", choices=["import", "export"])
    p.add_argument("file")
    p.set_defaults(func=cmd_kb)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (InputError, DecompositionError, KBError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
