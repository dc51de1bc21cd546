"""TextRank sentence extraction.

Sentences are nodes of an undirected graph weighted by vocabulary overlap
(shared distinct words over the sum of log sentence lengths) and ranked by
weighted PageRank power iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .selection import MPolicy, ScoredSentence, resolve_m, select_top_m
from .text import Document, Sentence, StopwordList


@dataclass(frozen=True)
class RankConfig:
    damping: float = 0.85
    epsilon: float = 1e-6
    max_iterations: int = 100

    def __post_init__(self):
        if not 0.0 < self.damping < 1.0:
            raise ValueError(f"damping must lie in (0, 1), got {self.damping}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")


@dataclass
class SimilarityGraph:
    """Undirected weighted graph; ``edges`` is keyed by ``(i, j)`` with ``i < j``."""

    n: int
    edges: dict[tuple[int, int], float] = field(default_factory=dict)

    def weight(self, i: int, j: int) -> float:
        if i == j:
            return 0.0
        return self.edges.get((min(i, j), max(i, j)), 0.0)

    def add_edge(self, i: int, j: int, w: float) -> None:
        if i == j:
            raise ValueError("self-loops are not allowed")
        if w < 0:
            raise ValueError("edge weights must be non-negative")
        if w > 0:
            self.edges[(min(i, j), max(i, j))] = float(w)

    def degree(self, i: int) -> int:
        return sum(1 for a, b in self.edges if a == i or b == i)

    def to_matrix(self) -> sparse.csr_matrix:
        if not self.edges:
            return sparse.csr_matrix((self.n, self.n))
        ij = np.array(list(self.edges.keys()), dtype=np.int64)
        w = np.fromiter(self.edges.values(), dtype=float, count=len(self.edges))
        rows = np.concatenate([ij[:, 0], ij[:, 1]])
        cols = np.concatenate([ij[:, 1], ij[:, 0]])
        return sparse.csr_matrix((np.concatenate([w, w]), (rows, cols)), shape=(self.n, self.n))

    def scaled(self, c: float) -> "SimilarityGraph":
        return SimilarityGraph(self.n, {k: v * c for k, v in self.edges.items()})


@dataclass(frozen=True)
class RankVector:
    scores: tuple[float, ...]
    converged: bool
    iterations: int


def _content_words(s: Sentence, stops: StopwordList) -> set[str]:
    return {t.norm for t in s.tokens if t.norm not in stops.words}


def similarity(a: Sentence, b: Sentence, stops: StopwordList) -> float:
    wa, wb = _content_words(a, stops), _content_words(b, stops)
    if len(wa) <= 1 or len(wb) <= 1:
        return 0.0
    return len(wa & wb) / (math.log(len(wa)) + math.log(len(wb)))


def build_graph(doc: Document, stops: StopwordList) -> SimilarityGraph:
    """Evaluate every sentence pair at once via a sparse incidence product."""
    n = len(doc.sentences)
    vocab: dict[str, int] = {}
    rows, cols = [], []
    for i, s in enumerate(doc.sentences):
        for w in _content_words(s, stops):
            rows.append(i)
            cols.append(vocab.setdefault(w, len(vocab)))
    graph = SimilarityGraph(n)
    if not vocab:
        return graph
    inc = sparse.csr_matrix(
        (np.ones(len(rows)), (rows, cols)), shape=(n, len(vocab))
    )
    sizes = np.asarray(inc.sum(axis=1)).ravel()
    logs = np.log(np.maximum(sizes, 1.0))
    shared = sparse.triu(inc @ inc.T, k=1).tocoo()
    for i, j, c in zip(shared.row, shared.col, shared.data):
        if c > 0 and sizes[i] > 1 and sizes[j] > 1:
            graph.edges[(int(i), int(j))] = float(c / (logs[i] + logs[j]))
    graph.edges = dict(sorted(graph.edges.items()))
    return graph


def rank(graph: SimilarityGraph, cfg: RankConfig = RankConfig()) -> RankVector:
    """Synchronous weighted PageRank from uniform scores of 1.0.

    Isolated nodes settle at ``1 - damping``. Non-convergence is reported
    through ``converged=False`` rather than raised.
    """
    if graph.n < 1:
        raise ValueError("graph must have at least one node")
    d = cfg.damping
    w = graph.to_matrix()
    out = np.asarray(w.sum(axis=1)).ravel()
    inv = np.divide(1.0, out, out=np.zeros_like(out), where=out > 0)
    # column-normalised transition: flow[i] = sum_j w(j,i)/out(j) * s(j)
    flow = (sparse.diags(inv) @ w).T.tocsr()
    s = np.ones(graph.n)
    for it in range(1, cfg.max_iterations + 1):
        new = (1.0 - d) + d * (flow @ s)
        delta = np.max(np.abs(new - s))
        s = new
        if delta < cfg.epsilon:
            return RankVector(tuple(s.tolist()), True, it)
    return RankVector(tuple(s.tolist()), False, cfg.max_iterations)


def textrank_extract(
    doc: Document,
    stops: StopwordList,
    cfg: RankConfig = RankConfig(),
    policy: MPolicy = MPolicy.ratio(0.2),
) -> Document:
    ranks = rank(build_graph(doc, stops), cfg)
    scored = [ScoredSentence(i, sc) for i, sc in enumerate(ranks.scores)]
    return select_top_m(scored, resolve_m(policy, doc), doc)
