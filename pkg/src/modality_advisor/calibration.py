"""Evaluation metrics and exhaustive grid-search calibration of ScoringConfig."""

from __future__ import annotations

import csv
import io
import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

from .decomposer import Lexicon
from .knowledge_base import KBStore
from .pipeline import AblationFlags, NO_ABLATION, assess
from .recommender import DEFAULT_COSTS
from .scoring import DynamismCoefficients, EstimationRules, ScoreWeights, ScoringConfig
from .task_model import Modality, TaskDescription

PARAM_NAMES = (
    "w_r",
    "w_t",
    "w_s",
    "w_rho",
    "alpha",
    "beta",
    "gamma",
    "theta",
    "band_low",
    "band_high",
    "tds_promote",
)

_RANGES = {
    "w_r": (0.0, float("inf")),
    "w_t": (0.0, float("inf")),
    "w_s": (0.0, float("inf")),
    "w_rho": (0.0, float("inf")),
    "alpha": (0.0, 1.0),
    "beta": (0.0, 1.0),
    "gamma": (0.0, 1.0),
    "theta": (0.0, 1.0),
    "band_low": (0.0, 2.0),
    "band_high": (0.0, 2.0),
    "tds_promote": (0.0, 1.0),
}


def _check_lengths(*seqs: Sequence[Any]) -> None:
    n = len(seqs[0])
    if any(len(s) != n for s in seqs):
        raise ValueError(f"length mismatch: {[len(s) for s in seqs]}")
    if n == 0:
        raise ValueError("need at least one prediction")


def accuracy(predictions: Sequence[Modality], gold: Sequence[Modality]) -> float:
    _check_lengths(predictions, gold)
    return sum(p == g for p, g in zip(predictions, gold)) / len(gold)


def unnecessary_agents(predictions: Sequence[Modality], gold: Sequence[Modality]) -> int:
    return sum(p == Modality.AGENTIC_AI and g < Modality.AGENTIC_AI for p, g in zip(predictions, gold))


def overengineering_reduction(
    predictions: Sequence[Modality],
    gold: Sequence[Modality],
    baseline_predictions: Sequence[Modality],
) -> float:
    """1 - U(pred)/U(baseline), U counting agent predictions on tasks whose gold tier is lower."""
    _check_lengths(predictions, gold, baseline_predictions)
    base = unnecessary_agents(baseline_predictions, gold)
    if base == 0:
        return 0.0
    return 1.0 - unnecessary_agents(predictions, gold) / base


def resource_savings(
    predictions: Sequence[Modality],
    baseline_predictions: Sequence[Modality],
    cost_model: Mapping[Modality, float] = DEFAULT_COSTS,
) -> float:
    _check_lengths(predictions, baseline_predictions)
    missing = [m.name for m in Modality if m not in cost_model]
    if missing:
        raise ValueError(f"cost model missing entries for {missing}")
    if any(cost_model[m] <= 0 for m in Modality):
        raise ValueError("costs must be positive")
    spent = sum(cost_model[p] for p in predictions)
    base = sum(cost_model[p] for p in baseline_predictions)
    return 1.0 - spent / base


# -- grid search -------------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    """Candidate values per parameter; parameters left out keep the base config value."""

    candidates: Mapping[str, tuple[float, ...]]

    def __post_init__(self):
        unknown = sorted(set(self.candidates) - set(PARAM_NAMES))
        if unknown:
            raise ValueError(f"unknown grid parameters {unknown}")
        for name, values in self.candidates.items():
            if not values:
                raise ValueError(f"grid for {name} is empty")
            lo, hi = _RANGES[name]
            bad = [v for v in values if not lo <= v <= hi]
            if bad:
                raise ValueError(f"{name} candidates out of range [{lo}, {hi}]: {bad}")

    @classmethod
    def from_dict(cls, data: Mapping[str, Sequence[float]]) -> "GridSpec":
        return cls({k: tuple(float(v) for v in vals) for k, vals in data.items()})

    @classmethod
    def load(cls, path: str | Path) -> "GridSpec":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def points(self, base: ScoringConfig) -> list[ScoringConfig]:
        """Distinct valid configs, weights normalized to sum 1."""
        defaults = dict(zip(PARAM_NAMES, base.param_tuple()))
        axes = [self.candidates.get(name, (defaults[name],)) for name in PARAM_NAMES]
        seen: set[tuple[float, ...]] = set()
        out = []
        for combo in itertools.product(*axes):
            p = dict(zip(PARAM_NAMES, combo))
            try:
                cfg = ScoringConfig(
                    weights=ScoreWeights.normalized(p["w_r"], p["w_t"], p["w_s"], p["w_rho"]),
                    coeffs=DynamismCoefficients(p["alpha"], p["beta"], p["gamma"]),
                    theta=p["theta"],
                    band_low=p["band_low"],
                    band_high=p["band_high"],
                    tds_promote=p["tds_promote"],
                    kb_margin=base.kb_margin,
                )
            except ValueError:
                continue
            key = cfg.param_tuple()
            if key not in seen:
                seen.add(key)
                out.append(cfg)
        return out


@dataclass(frozen=True)
class CalibrationResult:
    best_config: ScoringConfig
    best_accuracy: float
    evaluated_points: int
    tie_note: str | None = None
    trace: tuple[tuple[tuple[float, ...], float], ...] = field(default=(), repr=False)

    def to_dict(self) -> dict[str, Any]:
        return {
            "best_config": self.best_config.to_dict(),
            "best_accuracy": self.best_accuracy,
            "evaluated_points": self.evaluated_points,
            "tie_note": self.tie_note,
        }

    def trace_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([*PARAM_NAMES, "accuracy"])
        for params, acc in self.trace:
            writer.writerow([repr(v) for v in params] + [repr(acc)])
        return buf.getvalue()


def grid_search(
    corpus: Sequence[TaskDescription],
    grid: GridSpec,
    kb: KBStore,
    lexicon: Lexicon,
    base: ScoringConfig | None = None,
    flags: AblationFlags = NO_ABLATION,
    rules: EstimationRules | None = None,
) -> CalibrationResult:
    """Evaluate the full pipeline at every grid point and keep the most accurate config.

    Ties go to the config predicting fewer AGENTIC_AI tasks, then to the
    lexicographically smaller parameter tuple.
    """
    if not corpus:
        raise ValueError("corpus is empty")
    unlabeled = [t.id for t in corpus if t.gold_modality is None]
    if unlabeled:
        raise ValueError(f"unlabeled tasks in corpus: {unlabeled}")
    base = base or ScoringConfig()
    points = grid.points(base)
    if not points:
        raise ValueError("grid has no valid points")
    gold = [t.gold_modality for t in corpus]

    trace = []
    ranked = []
    for cfg in points:
        preds = [assess(t, cfg, kb, lexicon, flags, rules).modality for t in corpus]
        acc = accuracy(preds, gold)
        n_agent = sum(p == Modality.AGENTIC_AI for p in preds)
        trace.append((cfg.param_tuple(), acc))
        ranked.append((-acc, n_agent, cfg.param_tuple(), cfg))
    ranked.sort(key=lambda r: r[:3])
    best = ranked[0]
    tied = sum(1 for r in ranked if r[0] == best[0])
    note = None
    if tied > 1:
        note = f"{tied} points reached accuracy {-best[0]:.4f}; kept fewest agent predictions, then smallest parameters"
    return CalibrationResult(best[3], -best[0], len(points), note, tuple(trace))
