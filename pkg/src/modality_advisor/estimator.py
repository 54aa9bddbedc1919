"""scikit-learn compatible wrappers around the decomposer and the full recommender."""

from __future__ import annotations

from dataclasses import replace
from typing import Any

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin

from .calibration import GridSpec, accuracy, grid_search
from .decomposer import Lexicon, decompose, load_lexicon
from .knowledge_base import KBStore, load_kb
from .pipeline import AblationFlags, assess
from .recommender import Persona, render_report
from .scoring import DynamismCoefficients, ScoreWeights, ScoringConfig
from .task_model import Modality
from .validation import check_modalities, check_tasks


class TaskDecomposer(TransformerMixin, BaseEstimator):
    """Turns task descriptions into subtask DAGs.

    Parameters
    ----------
    lexicon : Lexicon, optional
        Vocabulary and cue phrases; the shipped lexicon when omitted.
    """

    def __init__(self, lexicon: Lexicon | None = None):
        self.lexicon = lexicon

    def fit(self, X, y=None):
        self.lexicon_ = self.lexicon or load_lexicon()
        return self

    def transform(self, X):
        lexicon = getattr(self, "lexicon_", None) or self.lexicon or load_lexicon()
        return [decompose(t, lexicon) for t in check_tasks(X)]


class ModalityRecommender(ClassifierMixin, BaseEstimator):
    """Recommends LLM_CALL, AI_ASSISTANT or AGENTIC_AI for each task.

    All scoring thresholds are constructor parameters so the estimator plays
    with ``get_params``/``set_params``/``clone``. ``fit`` is a no-op unless
    ``param_grid`` is given, in which case it runs an exhaustive grid search
    on the labeled tasks and keeps the most accurate configuration.

    Parameters
    ----------
    w_r, w_t, w_s, w_rho : float
        Weights for reasoning depth, tool need, state need and risk.
        Normalized to sum to one.
    alpha, beta, gamma : float
        Dynamism coefficients for workflow variability, tool volatility and
        model instability.
    theta : float
        Dynamism threshold for the self-reflection flag.
    band_low, band_high : float
        Max-ASS band edges separating the three modalities.
    tds_promote : float
        Max dynamism at which the band result is promoted one level.
    kb_margin : float
        Distance from a band edge, as a fraction of the band width, within which KB outcome history may adjust
        the result.
    kb, lexicon : optional
        Knowledge base and lexicon; the shipped defaults when omitted.
    ablation : AblationFlags, optional
        Components to switch off.
    param_grid : dict or GridSpec, optional
        Candidate values per parameter for calibration in ``fit``.

    Attributes
    ----------
    config_ : ScoringConfig
        Configuration used by ``predict``.
    classes_ : ndarray
        The three modalities in tier order.
    calibration_ : CalibrationResult or None
    """

    def __init__(
        self,
        w_r=0.4,
        w_t=0.3,
        w_s=0.2,
        w_rho=0.1,
        alpha=0.6,
        beta=0.4,
        gamma=0.2,
        theta=0.5,
        band_low=0.5,
        band_high=1.5,
        tds_promote=0.6,
        kb_margin=0.15,
        kb: KBStore | None = None,
        lexicon: Lexicon | None = None,
        ablation: AblationFlags | None = None,
        param_grid=None,
    ):
        self.w_r = w_r
        self.w_t = w_t
        self.w_s = w_s
        self.w_rho = w_rho
        self.alpha = alpha
        self.beta = beta
        self.gamma = gamma
        self.theta = theta
        self.band_low = band_low
        self.band_high = band_high
        self.tds_promote = tds_promote
        self.kb_margin = kb_margin
        self.kb = kb
        self.lexicon = lexicon
        self.ablation = ablation
        self.param_grid = param_grid

    @classmethod
    def from_config(cls, config: ScoringConfig, **kwargs) -> "ModalityRecommender":
        w, c = config.weights, config.coeffs
        return cls(
            w_r=w.r, w_t=w.t, w_s=w.s, w_rho=w.rho,
            alpha=c.alpha, beta=c.beta, gamma=c.gamma,
            theta=config.theta, band_low=config.band_low, band_high=config.band_high,
            tds_promote=config.tds_promote, kb_margin=config.kb_margin,
            **kwargs,
        )

    def _config(self) -> ScoringConfig:
        return ScoringConfig(
            weights=ScoreWeights.normalized(self.w_r, self.w_t, self.w_s, self.w_rho),
            coeffs=DynamismCoefficients(self.alpha, self.beta, self.gamma),
            theta=self.theta,
            band_low=self.band_low,
            band_high=self.band_high,
            tds_promote=self.tds_promote,
            kb_margin=self.kb_margin,
        )

    def _resources(self) -> tuple[KBStore, Lexicon, AblationFlags]:
        kb = self.kb if self.kb is not None else load_kb()
        lexicon = self.lexicon if self.lexicon is not None else load_lexicon()
        return kb, lexicon, self.ablation or AblationFlags()

    def fit(self, X, y=None):
        tasks = check_tasks(X)
        if y is not None:
            labels = check_modalities(y, len(tasks))
            tasks = [replace(t, gold_modality=m) for t, m in zip(tasks, labels)]
        config = self._config()
        kb, lexicon, flags = self._resources()
        self.calibration_ = None
        if self.param_grid is not None:
            grid = self.param_grid if isinstance(self.param_grid, GridSpec) else GridSpec.from_dict(self.param_grid)
            self.calibration_ = grid_search(tasks, grid, kb, lexicon, base=config, flags=flags)
            config = self.calibration_.best_config
        self.config_ = config
        self.classes_ = np.array(list(Modality), dtype=object)
        return self

    def _active_config(self) -> ScoringConfig:
        return getattr(self, "config_", None) or self._config()

    def predict(self, X) -> np.ndarray:
        kb, lexicon, flags = self._resources()
        config = self._active_config()
        preds = [assess(t, config, kb, lexicon, flags).modality for t in check_tasks(X)]
        return np.array(preds, dtype=object)

    def score(self, X, y, sample_weight=None) -> float:
        tasks = check_tasks(X)
        return accuracy(list(self.predict(tasks)), check_modalities(y, len(tasks)))

    def recommend(self, X, persona: Persona | str = Persona.DEVELOPER) -> list[dict[str, Any]]:
        """Full report documents, one per task."""
        kb, lexicon, flags = self._resources()
        config = self._active_config()
        out = []
        for t in check_tasks(X):
            result = assess(t, config, kb, lexicon, flags)
            out.append(render_report(result.recommendation, result.profile, Persona(persona), kb))
        return out
