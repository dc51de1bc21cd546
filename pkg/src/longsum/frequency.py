"""Frequency-driven sentence extraction.

Every non-stopword carries a weight (1 by default).  A word's value is its
total weight over the whole document, a sentence's value is the sum of the
values of the words it contains (per occurrence), and the top-M sentences
form the extract.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping

from .selection import MPolicy, ScoredSentence, resolve_m, select_top_m
from .text import Document, StopwordList


@dataclass(frozen=True)
class WordWeights:
    default_weight: float = 1.0
    overrides: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not self.default_weight > 0:
            raise ValueError("default_weight must be positive")
        for word, w in self.overrides.items():
            if not w > 0:
                raise ValueError(f"weight for {word!r} must be positive, got {w}")

    def __call__(self, word: str) -> float:
        return self.overrides.get(word, self.default_weight)

    @classmethod
    def from_file(cls, path, default_weight: float = 1.0) -> "WordWeights":
        """Read ``word<TAB>weight`` lines; ``#`` starts a comment."""
        overrides = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                try:
                    word, weight = line.split("\t")
                    overrides[word.strip().lower()] = float(weight)
                except ValueError:
                    raise ValueError(f"{path}:{lineno}: expected 'word<TAB>weight'") from None
        return cls(default_weight, overrides)


def word_values(doc: Document, stops: StopwordList, weights: WordWeights = WordWeights()) -> dict[str, float]:
    counts = Counter(
        tok.norm for s in doc.sentences for tok in s.tokens if tok.norm not in stops.words
    )
    return {w: weights(w) * c for w, c in counts.items()}


def sentence_values(doc: Document, table: Mapping[str, float]) -> list[ScoredSentence]:
    return [
        ScoredSentence(s.index, float(sum(table.get(tok.norm, 0.0) for tok in s.tokens)))
        for s in doc.sentences
    ]


def freq_extract(
    doc: Document,
    stops: StopwordList,
    weights: WordWeights = WordWeights(),
    policy: MPolicy = MPolicy.reference_length(),
) -> Document:
    table = word_values(doc, stops, weights)
    scored = sentence_values(doc, table)
    return select_top_m(scored, resolve_m(policy, doc), doc)
