from __future__ import annotations

import random
from dataclasses import replace

import pytest

from modality_advisor.calibration import (
    GridSpec,
    accuracy,
    grid_search,
    overengineering_reduction,
    resource_savings,
)
from modality_advisor.harness import baseline_naive
from modality_advisor.pipeline import assess
from modality_advisor.scoring import ScoringConfig
from modality_advisor.task_model import Modality, TaskDescription

L, A, G = Modality.LLM_CALL, Modality.AI_ASSISTANT, Modality.AGENTIC_AI
COSTS = {L: 1, A: 3, G: 10}


class TestAccuracy:
    def test_perfect(self):
        assert accuracy([L, A, G], [L, A, G]) == 1.0

    def test_half(self):
        assert accuracy([L, A], [L, G]) == 0.5

    def test_naive_on_desk_corpus(self, desk_corpus):
        preds = [baseline_naive(t) for t in desk_corpus]
        assert accuracy(preds, [t.gold_modality for t in desk_corpus]) == pytest.approx(1 / 3)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            accuracy([L], [L, A])


class TestOverengineeringReduction:
    def test_same_as_baseline(self):
        gold = [L, A, G]
        assert overengineering_reduction([G] * 3, gold, [G] * 3) == 0.0

    def test_gold_predictions(self):
        gold = [L, A, G]
        assert overengineering_reduction(gold, gold, [G] * 3) == 1.0

    def test_eleven_of_twenty(self):
        gold = [L] * 20
        preds = [G] * 11 + [L] * 9
        assert overengineering_reduction(preds, gold, [G] * 20) == pytest.approx(0.45)

    def test_can_be_negative(self):
        gold = [L, L]
        assert overengineering_reduction([G, G], gold, [G, L]) == pytest.approx(-1.0)


class TestResourceSavings:
    def test_same_as_baseline(self):
        assert resource_savings([G, A], [G, A], COSTS) == 0.0

    def test_all_llm_vs_all_agent(self):
        assert resource_savings([L] * 30, [G] * 30, COSTS) == pytest.approx(0.9)

    def test_missing_cost(self):
        with pytest.raises(ValueError):
            resource_savings([L], [G], {L: 1, G: 10})

    @pytest.mark.xfail(
        strict=True,
        reason=(
            "Unreachable with 10 gold agents out of 30 and the gold-LLM currency task: the largest "
            "gold cost is 10*10 + 19*3 + 1 = 158, so savings is at least 1 - 158/300 = 0.473, above "
            "the 0.47 upper tolerance. The shipped corpus gives 1 - 144/300 = 0.52."
        ),
    )
    def test_desk_gold_vs_naive_near_target(self, desk_corpus):
        gold = [t.gold_modality for t in desk_corpus]
        naive = [baseline_naive(t) for t in desk_corpus]
        assert resource_savings(gold, naive) == pytest.approx(0.37, abs=0.10)

    def test_desk_gold_vs_naive_value(self, desk_corpus):
        gold = [t.gold_modality for t in desk_corpus]
        naive = [baseline_naive(t) for t in desk_corpus]
        assert resource_savings(gold, naive) == pytest.approx(1 - 144 / 300)


def test_metrics_are_permutation_invariant():
    rng = random.Random(3)
    for _ in range(200):
        n = rng.randint(1, 12)
        preds = [rng.choice(list(Modality)) for _ in range(n)]
        gold = [rng.choice(list(Modality)) for _ in range(n)]
        base = [rng.choice(list(Modality)) for _ in range(n)]
        perm = list(range(n))
        rng.shuffle(perm)
        p2, g2, b2 = ([x[i] for i in perm] for x in (preds, gold, base))
        assert accuracy(preds, gold) == accuracy(p2, g2)
        assert overengineering_reduction(preds, gold, base) == pytest.approx(overengineering_reduction(p2, g2, b2))
        assert resource_savings(preds, base, COSTS) == pytest.approx(resource_savings(p2, b2, COSTS))


PLANTED = ScoringConfig(theta=0.6, band_low=0.6, band_high=1.3)
PLANT_GRID = GridSpec.from_dict({"theta": [0.4, 0.5, 0.6], "band_low": [0.4, 0.6, 0.8], "band_high": [1.3, 1.5, 1.7]})


def planted_corpus(corpus, kb, lexicon):
    return [replace(t, gold_modality=assess(t, PLANTED, kb, lexicon).modality) for t in corpus]


def plant_and_recover(corpus, kb, lexicon):
    result = grid_search(planted_corpus(corpus, kb, lexicon), PLANT_GRID, kb, lexicon)
    perfect = [params for params, acc in result.trace if acc == 1.0]
    return result, perfect


class TestGridSearch:
    def test_plant_and_recover(self, desk_corpus, seed_kb, lexicon):
        result, perfect = plant_and_recover(desk_corpus, seed_kb, lexicon)
        assert perfect == [PLANTED.param_tuple()]  # the planted point is the unique optimum
        assert result.best_config == PLANTED
        assert result.best_accuracy == 1.0

    def test_single_point_grid(self, desk_corpus, seed_kb, lexicon):
        grid = GridSpec.from_dict({"band_low": [0.1], "band_high": [0.2]})
        result = grid_search(desk_corpus, grid, seed_kb, lexicon)
        assert result.evaluated_points == 1
        assert (result.best_config.band_low, result.best_config.band_high) == (0.1, 0.2)

    def test_exhaustive(self, desk_corpus, seed_kb, lexicon):
        grid = GridSpec.from_dict({"tds_promote": [0.5, 0.6, 0.9], "theta": [0.3, 0.7]})
        result = grid_search(desk_corpus, grid, seed_kb, lexicon)
        gold = [t.gold_modality for t in desk_corpus]
        for cfg in grid.points(ScoringConfig()):
            acc = accuracy([assess(t, cfg, seed_kb, lexicon).modality for t in desk_corpus], gold)
            assert result.best_accuracy >= acc

    def test_tie_break_prefers_fewer_agents(self, fixtures, seed_kb, lexicon):
        # The meeting task (max ASS 1.0, max TDS 0.35) with a wrong gold label scores 0
        # at both points; the lower promotion threshold predicts an agent, so the
        # larger parameter tuple wins on the agent-count criterion.
        corpus = [replace(fixtures["T02"], gold_modality=Modality.LLM_CALL)]
        grid = GridSpec.from_dict({"tds_promote": [0.3, 0.6]})
        result = grid_search(corpus, grid, seed_kb, lexicon)
        assert result.best_accuracy == 0.0
        assert result.best_config.tds_promote == 0.6
        assert result.tie_note

    def test_tie_break_then_smaller_parameters(self, desk_corpus, seed_kb, lexicon):
        # No task has max ASS in [1.99, 2.0), so both points predict identically.
        grid = GridSpec.from_dict({"band_high": [1.99, 2.0]})
        result = grid_search(desk_corpus, grid, seed_kb, lexicon)
        assert result.best_config.band_high == 1.99

    def test_unlabeled_task(self, desk_corpus, seed_kb, lexicon):
        corpus = [*desk_corpus, TaskDescription(id="u", text="Fetch status")]
        with pytest.raises(ValueError, match="unlabeled"):
            grid_search(corpus, PLANT_GRID, seed_kb, lexicon)

    def test_empty_corpus(self, seed_kb, lexicon):
        with pytest.raises(ValueError):
            grid_search([], PLANT_GRID, seed_kb, lexicon)

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            GridSpec.from_dict({"nope": [1.0]})
        with pytest.raises(ValueError):
            GridSpec.from_dict({"theta": []})

    def test_trace_csv(self, desk_corpus, seed_kb, lexicon):
        grid = GridSpec.from_dict({"theta": [0.4, 0.5]})
        lines = grid_search(desk_corpus, grid, seed_kb, lexicon).trace_csv().splitlines()
        assert lines[0].startswith("w_r,w_t,w_s,w_rho,alpha,beta,gamma,theta")
        assert len(lines) == 3
