"""Seeded random sentences over the shipped lexicon, used by the acyclicity checks."""

from __future__ import annotations

import random

from modality_advisor.decomposer import Lexicon

FILLER = ["the", "a", "quickly", "our", "all", "new", "and", "with", "for", "team", "data"]
PUNCT = [".", ";", ",", "", "", "", "", ""]


def fuzz_sentences(lexicon: Lexicon, n: int = 100, seed: int = 7) -> list[str]:
    """Half the sentences chain verb-noun pairs through cue phrases, half are word soup."""
    rng = random.Random(seed)
    verbs = sorted(lexicon.action_verbs)
    nouns = sorted(lexicon.target_nouns)
    cues = sorted({*lexicon.temporal_cues, *lexicon.reverse_cues, *lexicon.data_flow_cues})

    def pair() -> list[str]:
        return [rng.choice(verbs), *rng.sample(FILLER, rng.randint(0, 2)), rng.choice(nouns)]

    out = []
    for i in range(n):
        words: list[str] = []
        if i % 2 == 0:
            words += pair()
            for _ in range(rng.randint(1, 4)):
                words += [rng.choice(cues), *pair()]
                if rng.random() < 0.2:
                    words[-1] += rng.choice([".", ";"])
            if rng.random() < 0.3:
                words = [rng.choice(cues), *words]
        else:
            for _ in range(rng.randint(1, 6)):
                kind = rng.random()
                if kind < 0.45:
                    words += pair()
                elif kind < 0.7:
                    words.append(rng.choice(cues))
                elif kind < 0.8:
                    words.append(rng.choice(FILLER))
                else:
                    words.append(rng.choice(nouns))
                p = rng.choice(PUNCT)
                if p:
                    words[-1] += p
        out.append(" ".join(words))
    return out
