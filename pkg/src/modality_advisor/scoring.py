"""Per-subtask scoring: agentic suitability, true dynamism and the self-reflection flag.

Also owns :class:`ScoringConfig` and its file format, and the rule-based
feature estimator used when a task ships without pre-supplied features.
"""

from __future__ import annotations

import json
import math
import os
import re
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping

WEIGHT_SUM_TOL = 1e-9

RISK_LEVELS = ("Low", "Medium", "High")


def _check_level(name: str, value: int) -> None:
    if isinstance(value, bool) or not isinstance(value, int) or value not in (0, 1, 2):
        raise ValueError(f"{name} must be an integer in {{0, 1, 2}}, got {value!r}")


def _check_unit(name: str, value: float) -> None:
    if not (isinstance(value, (int, float)) and math.isfinite(value) and 0.0 <= value <= 1.0):
        raise ValueError(f"{name} must be a finite real in [0, 1], got {value!r}")


@dataclass(frozen=True)
class SubtaskFeatures:
    """Raw per-subtask inputs to the three scores.

    The discrete levels (reasoning depth, tool need, state need, risk) are
    0/1/2. Risk maps Low/Medium/High onto 0/1/2. Workflow variability, tool
    volatility and model instability are reals in [0, 1].
    """

    reasoning_depth: int = 0
    tool_need: int = 0
    state_need: int = 0
    risk: int = 0
    workflow_variability: float = 0.0
    tool_volatility: float = 0.0
    model_instability: float = 0.0
    has_conditional_branches: bool = False
    has_nondeterministic_tools: bool = False
    needs_midexec_validation: bool = False

    def __post_init__(self):
        _check_level("reasoning_depth", self.reasoning_depth)
        _check_level("tool_need", self.tool_need)
        _check_level("state_need", self.state_need)
        _check_level("risk", self.risk)
        _check_unit("workflow_variability", self.workflow_variability)
        _check_unit("tool_volatility", self.tool_volatility)
        _check_unit("model_instability", self.model_instability)

    _SHORT = {
        "R": "reasoning_depth",
        "T": "tool_need",
        "S": "state_need",
        "rho": "risk",
        "W": "workflow_variability",
        "V": "tool_volatility",
        "M": "model_instability",
        "C": "has_conditional_branches",
        "N": "has_nondeterministic_tools",
        "midexec": "needs_midexec_validation",
    }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SubtaskFeatures":
        kwargs: dict[str, Any] = {}
        for key, value in data.items():
            name = cls._SHORT.get(key, key)
            if name == "risk" and isinstance(value, str):
                value = RISK_LEVELS.index(value.capitalize())
            kwargs[name] = value
        return cls(**kwargs)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def elementwise_max(cls, items: Iterable["SubtaskFeatures"]) -> "SubtaskFeatures":
        items = list(items)
        if not items:
            raise ValueError("need at least one feature vector")
        merged = {
            name: max(getattr(f, name) for f in items)
            for name in cls.__dataclass_fields__
        }
        return cls(**merged)


@dataclass(frozen=True)
class ScoreWeights:
    r: float = 0.4
    t: float = 0.3
    s: float = 0.2
    rho: float = 0.1

    def __post_init__(self):
        values = (self.r, self.t, self.s, self.rho)
        if any(not math.isfinite(v) or v < 0 for v in values):
            raise ValueError(f"weights must be finite and nonnegative, got {values}")
        if abs(sum(values) - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"weights must sum to 1 (got {sum(values)!r})")

    @classmethod
    def normalized(cls, r: float, t: float, s: float, rho: float) -> "ScoreWeights":
        total = math.fsum((r, t, s, rho))
        if total <= 0:
            raise ValueError("weights must have a positive sum")
        if total == 1.0:
            return cls(r, t, s, rho)
        return cls(r / total, t / total, s / total, rho / total)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.r, self.t, self.s, self.rho)


@dataclass(frozen=True)
class DynamismCoefficients:
    alpha: float = 0.6
    beta: float = 0.4
    gamma: float = 0.2

    def __post_init__(self):
        values = (self.alpha, self.beta, self.gamma)
        if any(not math.isfinite(v) or v < 0 for v in values):
            raise ValueError(f"dynamism coefficients must be nonnegative, got {values}")
        if self.alpha + self.beta > 1.0 + 1e-12 or self.gamma > 1.0:
            raise ValueError("dynamism coefficients need alpha + beta <= 1 and gamma <= 1")


@dataclass(frozen=True)
class ScoringConfig:
    weights: ScoreWeights = field(default_factory=ScoreWeights)
    coeffs: DynamismCoefficients = field(default_factory=DynamismCoefficients)
    theta: float = 0.5
    band_low: float = 0.5
    band_high: float = 1.5
    tds_promote: float = 0.6
    # max_ass distance from a band edge within which KB outcome history may adjust the result
    kb_margin: float = 0.15

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError(f"theta must lie in [0, 1], got {self.theta}")
        if not 0.0 <= self.band_low < self.band_high <= 2.0:
            raise ValueError(
                f"bands need 0 <= band_low < band_high <= 2, got ({self.band_low}, {self.band_high})"
            )
        if not 0.0 <= self.tds_promote <= 1.0:
            raise ValueError(f"tds_promote must lie in [0, 1], got {self.tds_promote}")
        if self.kb_margin < 0:
            raise ValueError("kb_margin must be nonnegative")

    def to_dict(self) -> dict[str, Any]:
        w, c = self.weights, self.coeffs
        return {
            "weights": {"r": w.r, "t": w.t, "s": w.s, "rho": w.rho},
            "coeffs": {"alpha": c.alpha, "beta": c.beta, "gamma": c.gamma},
            "theta": self.theta,
            "band_low": self.band_low,
            "band_high": self.band_high,
            "tds_promote": self.tds_promote,
            "kb_margin": self.kb_margin,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ScoringConfig":
        base = cls()
        w = data.get("weights", {})
        c = data.get("coeffs", {})
        return cls(
            weights=ScoreWeights(
                float(w.get("r", base.weights.r)),
                float(w.get("t", base.weights.t)),
                float(w.get("s", base.weights.s)),
                float(w.get("rho", base.weights.rho)),
            ),
            coeffs=DynamismCoefficients(
                float(c.get("alpha", base.coeffs.alpha)),
                float(c.get("beta", base.coeffs.beta)),
                float(c.get("gamma", base.coeffs.gamma)),
            ),
            theta=float(data.get("theta", base.theta)),
            band_low=float(data.get("band_low", base.band_low)),
            band_high=float(data.get("band_high", base.band_high)),
            tds_promote=float(data.get("tds_promote", base.tds_promote)),
            kb_margin=float(data.get("kb_margin", base.kb_margin)),
        )

    def param_tuple(self) -> tuple[float, ...]:
        """Flat parameter vector in grid-search order."""
        return (
            *self.weights.as_tuple(),
            self.coeffs.alpha,
            self.coeffs.beta,
            self.coeffs.gamma,
            self.theta,
            self.band_low,
            self.band_high,
            self.tds_promote,
        )


def _read_mapping(path: Path) -> dict[str, Any]:
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:  # python < 3.11
            import tomli as tomllib
        return tomllib.loads(text)
    return json.loads(text)


def default_config_path() -> Path:
    """Path of the active default config; ``STRIDE_CONFIG`` overrides the shipped file."""
    override = os.environ.get("STRIDE_CONFIG")
    if override:
        return Path(override)
    return Path(str(resources.files("modality_advisor") / "config" / "default.json"))


def load_config(path: str | Path | None = None) -> ScoringConfig:
    path = Path(path) if path is not None else default_config_path()
    return ScoringConfig.from_dict(_read_mapping(path))


def load_estimation_rules(path: str | Path | None = None) -> "EstimationRules":
    path = Path(path) if path is not None else default_config_path()
    data = _read_mapping(path)
    return EstimationRules.from_dict(data.get("estimation", {}))


# -- the three scores ---------------------------------------------------------


def agentic_suitability(features: SubtaskFeatures, weights: ScoreWeights) -> float:
    """Weighted sum of reasoning depth, tool need, state need and risk. Range [0, 2]."""
    total = weights.r + weights.t + weights.s + weights.rho
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise ValueError(f"weights must sum to 1 (got {total!r})")
    return math.fsum(
        (
            weights.r * features.reasoning_depth,
            weights.t * features.tool_need,
            weights.s * features.state_need,
            weights.rho * features.risk,
        )
    )


@dataclass(frozen=True)
class DynamismResult:
    value: float
    raw: float
    clamped: bool


def dynamism_breakdown(features: SubtaskFeatures, coeffs: DynamismCoefficients) -> DynamismResult:
    raw = (
        coeffs.alpha * features.workflow_variability
        + coeffs.beta * features.tool_volatility
        - coeffs.gamma * features.model_instability
    )
    value = min(1.0, max(0.0, raw))
    return DynamismResult(value=value, raw=raw, clamped=value != raw)


def true_dynamism(features: SubtaskFeatures, coeffs: DynamismCoefficients) -> float:
    """Workflow- and tool-driven variability net of model instability, clamped to [0, 1]."""
    return dynamism_breakdown(features, coeffs).value


def self_reflection(features: SubtaskFeatures, tds: float, theta: float) -> bool:
    """True iff dynamism clears ``theta`` and at least one trigger condition holds."""
    if not (0.0 <= tds <= 1.0 and 0.0 <= theta <= 1.0):
        raise ValueError(f"tds and theta must lie in [0, 1], got tds={tds}, theta={theta}")
    triggered = (
        features.has_conditional_branches
        or features.has_nondeterministic_tools
        or features.needs_midexec_validation
    )
    return tds >= theta and triggered


@dataclass(frozen=True)
class SubtaskScores:
    ass: float
    tds: float
    sr: bool
    tds_raw: float = 0.0
    tds_clamped: bool = False

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"ass": self.ass, "tds": self.tds, "sr": self.sr}
        if self.tds_clamped:
            out["tds_raw"] = self.tds_raw
            out["tds_clamped"] = True
        return out


def score_subtask(features: SubtaskFeatures, config: ScoringConfig) -> SubtaskScores:
    ass = agentic_suitability(features, config.weights)
    dyn = dynamism_breakdown(features, config.coeffs)
    sr = self_reflection(features, dyn.value, config.theta)
    return SubtaskScores(ass=ass, tds=dyn.value, sr=sr, tds_raw=dyn.raw, tds_clamped=dyn.clamped)


# -- feature estimation for tasks without fixture features --------------------


@dataclass(frozen=True)
class EstimationRules:
    """Constants for estimating features from text and declared tools.

    Each matched conditional cue adds ``workflow_per_cue`` to workflow
    variability; each volatile tool adds ``volatility_per_tool`` to tool
    volatility; a generative verb sets model instability to
    ``generative_instability``. All sums are capped at 1.
    """

    workflow_per_cue: float = 0.3
    volatility_per_tool: float = 0.5
    generative_instability: float = 0.3
    default_reasoning_depth: int = 1
    conditional_cues: tuple[str, ...] = ("if", "when", "unless", "depending", "otherwise", "whether")
    validation_cues: tuple[str, ...] = ("verify", "validate", "check", "confirm", "ensure")
    session_state_cues: tuple[str, ...] = ("conversation", "session", "follow-up", "notes")
    persistent_state_cues: tuple[str, ...] = ("history", "track", "persistent", "ongoing", "over time")
    high_risk_cues: tuple[str, ...] = ("production", "legal", "compliance", "incident", "payment", "security")
    generative_verbs: tuple[str, ...] = ("generate", "write", "draft", "compose")
    verb_depth: Mapping[str, int] = field(default_factory=dict)
    domain_risk: Mapping[str, int] = field(
        default_factory=lambda: {"SRE": 1, "COMPLIANCE": 1}
    )

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "EstimationRules":
        kwargs: dict[str, Any] = {}
        for key, value in data.items():
            if key not in cls.__dataclass_fields__:
                raise ValueError(f"unknown estimation rule {key!r}")
            kwargs[key] = tuple(value) if isinstance(value, list) else value
        return replace(cls(), **kwargs)


def _has_cue(text: str, cues: Iterable[str]) -> int:
    count = 0
    for cue in cues:
        count += len(re.findall(r"\b" + re.escape(cue) + r"\b", text))
    return count


def estimate_features(
    verb: str,
    text: str,
    declared_tools: Iterable[str],
    volatile_tools: Iterable[str],
    domain: str,
    rules: EstimationRules | None = None,
) -> SubtaskFeatures:
    """Rule-based features for one subtask of a task lacking fixture features."""
    rules = rules or EstimationRules()
    low = text.lower()
    tools = list(declared_tools)
    n_volatile = len(list(volatile_tools))
    cond = _has_cue(low, rules.conditional_cues)
    validate = _has_cue(low, rules.validation_cues) > 0
    if _has_cue(low, rules.persistent_state_cues):
        state = 2
    elif _has_cue(low, rules.session_state_cues):
        state = 1
    else:
        state = 0
    risk = 2 if _has_cue(low, rules.high_risk_cues) else rules.domain_risk.get(domain, 0)
    depth = rules.verb_depth.get(verb, rules.default_reasoning_depth)
    return SubtaskFeatures(
        reasoning_depth=int(depth),
        tool_need=min(2, len(tools)),
        state_need=state,
        risk=int(risk),
        workflow_variability=min(1.0, cond * rules.workflow_per_cue),
        tool_volatility=min(1.0, n_volatile * rules.volatility_per_tool),
        model_instability=rules.generative_instability if verb in rules.generative_verbs else 0.0,
        has_conditional_branches=cond > 0,
        has_nondeterministic_tools=n_volatile > 0,
        needs_midexec_validation=validate,
    )
