"""ROUGE-N and ROUGE-L (summary-level LCS) with precision, recall and F1."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

from .errors import ConfigError
from .text import Document


@dataclass(frozen=True)
class RougeVariant:
    """``RougeVariant(n)`` is ROUGE-N; ``RougeVariant(None)`` is ROUGE-L."""

    n: Union[int, None] = None

    def __post_init__(self):
        if self.n is not None and (not isinstance(self.n, int) or self.n < 1):
            raise ConfigError(f"ROUGE-N order must be a positive integer, got {self.n!r}")

    @property
    def name(self) -> str:
        return "rouge-l" if self.n is None else f"rouge-{self.n}"

    @property
    def short(self) -> str:
        return "rl" if self.n is None else f"r{self.n}"

    @property
    def label(self) -> str:
        return "R-L" if self.n is None else f"R-{self.n}"

    @classmethod
    def parse(cls, text: str) -> "RougeVariant":
        t = text.strip().lower().replace("rouge-", "r").replace("rouge", "r").replace("-", "")
        if t == "rl":
            return cls(None)
        if t.startswith("r") and t[1:].isdigit():
            return cls(int(t[1:]))
        raise ConfigError(f"unknown ROUGE variant {text!r}")

    @classmethod
    def parse_list(cls, text: Union[str, Iterable[str]]) -> tuple["RougeVariant", ...]:
        items = text.split(",") if isinstance(text, str) else list(text)
        out = []
        for item in items:
            v = cls.parse(item)
            if v not in out:
                out.append(v)
        if not out:
            raise ConfigError("at least one ROUGE variant is required")
        return tuple(sorted(out, key=_variant_order))

    def __str__(self) -> str:
        return self.name


def _variant_order(v: RougeVariant):
    return (v.n is None, v.n or 0)


DEFAULT_VARIANTS = (RougeVariant(1), RougeVariant(2), RougeVariant(None))


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, matches: int, cand_total: int, ref_total: int) -> "RougeScore":
        p = matches / cand_total if cand_total else 0.0
        r = matches / ref_total if ref_total else 0.0
        f = 2 * p * r / (p + r) if p + r > 0 else 0.0
        return cls(p, r, f)

    def as_dict(self) -> dict:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1}


def ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    if n < 1:
        raise ValueError("n must be >= 1")
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(candidate: Sequence[str], reference: Sequence[str], n: int) -> RougeScore:
    cand = ngram_counts(candidate, n)
    ref = ngram_counts(reference, n)
    matches = sum((cand & ref).values())
    return RougeScore.from_counts(matches, sum(cand.values()), sum(ref.values()))


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            if x == y:
                cur.append(prev[j] + 1)
            else:
                cur.append(cur[j] if cur[j] > prev[j + 1] else prev[j + 1])
        prev = cur
    return prev[-1]


def rouge_l(candidate: Sequence[str], reference: Sequence[str]) -> RougeScore:
    return RougeScore.from_counts(lcs_length(candidate, reference), len(candidate), len(reference))


def score_tokens(
    candidate: Sequence[str], reference: Sequence[str], variants: Iterable[RougeVariant]
) -> dict[RougeVariant, RougeScore]:
    out = {}
    for v in variants:
        out[v] = rouge_l(candidate, reference) if v.n is None else rouge_n(candidate, reference, v.n)
    return out


def score_document(
    candidate: Document, reference: Document, variants: Iterable[RougeVariant] = DEFAULT_VARIANTS
) -> dict[RougeVariant, RougeScore]:
    """Score the flattened token streams of two summaries (stopwords kept)."""
    ref = reference.norms()
    if not ref:
        raise ValueError(f"reference for document {reference.id!r} is empty")
    return score_tokens(candidate.norms(), ref, variants)


@dataclass
class MeanAccumulator:
    """Running sums of P/R/F1 per variant; ``merge`` is associative."""

    count: int = 0
    sums: dict = field(default_factory=dict)

    def add(self, scores: dict[RougeVariant, RougeScore]) -> None:
        self.count += 1
        for v, s in scores.items():
            p, r, f = self.sums.get(v, (0.0, 0.0, 0.0))
            self.sums[v] = (p + s.precision, r + s.recall, f + s.f1)

    def merge(self, other: "MeanAccumulator") -> "MeanAccumulator":
        out = MeanAccumulator(self.count + other.count, dict(self.sums))
        for v, (p, r, f) in other.sums.items():
            a, b, c = out.sums.get(v, (0.0, 0.0, 0.0))
            out.sums[v] = (a + p, b + r, c + f)
        return out

    def means(self) -> dict[RougeVariant, RougeScore]:
        if not self.count:
            return {}
        return {
            v: RougeScore(p / self.count, r / self.count, f / self.count)
            for v, (p, r, f) in sorted(self.sums.items(), key=lambda kv: _variant_order(kv[0]))
        }
