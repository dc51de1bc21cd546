"""How many sentences to extract (M-policies) and top-M selection."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import ConfigError, MissingReferenceError
from .text import Document, Sentence


@dataclass(frozen=True)
class ScoredSentence:
    index: int
    score: float


@dataclass(frozen=True)
class MPolicy:
    """One of ``fixed(k)``, ``reference_length`` or ``ratio(p)``."""

    variant: str
    k: Optional[int] = None
    p: Optional[float] = None

    def __post_init__(self):
        if self.variant == "fixed":
            if not isinstance(self.k, int) or isinstance(self.k, bool) or self.k < 1:
                raise ConfigError(f"fixed policy needs a positive integer k, got {self.k!r}")
        elif self.variant == "ratio":
            if self.p is None or not (0.0 < self.p <= 1.0):
                raise ConfigError(f"ratio policy needs p in (0, 1], got {self.p!r}")
        elif self.variant != "reference_length":
            raise ConfigError(f"unknown M-policy {self.variant!r}")

    @classmethod
    def fixed(cls, k: int) -> "MPolicy":
        return cls("fixed", k=k)

    @classmethod
    def reference_length(cls) -> "MPolicy":
        return cls("reference_length")

    @classmethod
    def ratio(cls, p: float) -> "MPolicy":
        return cls("ratio", p=float(p))

    @classmethod
    def parse(cls, text: str) -> "MPolicy":
        """Parse the CLI form: ``fixed:K``, ``ref`` or ``ratio:P``."""
        text = text.strip()
        if text in ("ref", "reference_length"):
            return cls.reference_length()
        kind, _, arg = text.partition(":")
        try:
            if kind == "fixed":
                return cls.fixed(int(arg))
            if kind == "ratio":
                return cls.ratio(float(arg))
        except ValueError:
            pass
        raise ConfigError(f"cannot parse M-policy {text!r} (expected fixed:K, ref or ratio:P)")

    def __str__(self) -> str:
        if self.variant == "fixed":
            return f"fixed:{self.k}"
        if self.variant == "ratio":
            return f"ratio:{self.p:g}"
        return "ref"


def resolve_m(policy: MPolicy, doc: Document) -> int:
    n = len(doc.sentences)
    if n < 1:
        raise ConfigError(f"document {doc.id!r} has no sentences")
    if policy.variant == "fixed":
        return min(policy.k, n)
    if policy.variant == "reference_length":
        if not doc.reference:
            raise MissingReferenceError(doc.id)
        return min(len(doc.reference), n)
    # round half up; builtin round() is banker's rounding
    return min(n, max(1, math.floor(policy.p * n + 0.5)))


def select_top_m(scored: Sequence[ScoredSentence], m: int, doc: Document) -> Document:
    """Keep the ``m`` best-scoring sentences, emitted in document order.

    Ties go to the lower sentence index.
    """
    n = len(doc.sentences)
    if not 1 <= m <= n:
        raise ValueError(f"m={m} outside [1, {n}]")
    best = sorted(scored, key=lambda s: (-s.score, s.index))[:m]
    keep = sorted(s.index for s in best)
    origins = doc.origins
    sentences = tuple(
        Sentence(new, doc.sentences[i].text, doc.sentences[i].tokens)
        for new, i in enumerate(keep)
    )
    return Document(
        id=doc.id,
        sentences=sentences,
        reference=doc.reference,
        source_indices=tuple(origins[i] for i in keep),
    )
