"""Exit criteria for the toolkit; one summary line per criterion.

Criteria 1-3 need the public arXiv/PubMed summarization releases. Point
``LONGSUM_ARXIV_TEST`` / ``LONGSUM_PUBMED_TEST`` at the test-split JSONL
files (``test.txt`` in the release) to run them; they skip otherwise.
"""

import json
import os
import random
import time

import numpy as np
import pytest

from longsum.backend import BackendSpec, RetryPolicy, summarize
from longsum.dataset import JsonlReader, dataset_stats
from longsum.errors import BackendError
from longsum.pipeline import PipelineConfig, run_corpus, run_document, strip_timings
from longsum.rouge import DEFAULT_VARIANTS, RougeScore, lcs_length, rouge_n
from longsum.selection import MPolicy
from longsum.testing import MockBackendServer
from longsum.text import make_document
from longsum.textrank import SimilarityGraph, rank

from conftest import write_jsonl
from oracles import brute_clipped_overlap, brute_lcs, dense_rank, prf

R1, R2, RL = DEFAULT_VARIANTS
TOLERANCE = 3.0  # absolute F1 points
DATASETS = {"arxiv": "LONGSUM_ARXIV_TEST", "pubmed": "LONGSUM_PUBMED_TEST"}

# Table 2, F1 x 100 (R-1, R-2, R-L) over the first 100 test documents
EXTRACTION_ONLY = {"arxiv": (27.05, 7.94, 13.87), "pubmed": (34.65, 12.40, 19.66)}
TEXTRANK_ONLY = {"arxiv": (29.49, 9.58, 14.86), "pubmed": (31.34, 12.25, 17.35)}
# Table 1: avg sentences/doc, avg tokens/doc, avg tokens/sentence
TABLE1 = {"arxiv": (206, 6029, 29), "pubmed": (86, 3048, 33)}


def dataset_path(name):
    path = os.environ.get(DATASETS[name])
    return path if path and os.path.exists(path) else None


def available():
    return [name for name in DATASETS if dataset_path(name)]


_runs = {}


def reproduce(name, method):
    key = (name, method)
    if key not in _runs:
        cfg = PipelineConfig(preprocessor=method, m_policy=MPolicy.reference_length(), limit=100)
        start = time.perf_counter()
        report = run_corpus(dataset_path(name), cfg)
        _runs[key] = (report, time.perf_counter() - start)
    return _runs[key]


def check_against_table(request, expected, method, budget_s):
    names = available()
    if not names:
        pytest.skip("public datasets not available; set " + " / ".join(DATASETS.values()))
    lines, failures = [], []
    for name in names:
        report, elapsed = reproduce(name, method)
        got = [100 * report.means[v].f1 for v in (R1, R2, RL)]
        for label, g, e in zip(("R-1", "R-2", "R-L"), got, expected[name]):
            ok = abs(g - e) <= TOLERANCE
            lines.append(f"{name} {label} {g:.2f} vs {e:.2f} {'ok' if ok else 'OUT'}")
            if not ok:
                failures.append(f"{name} {label}: {g:.2f} vs paper {e:.2f}")
        assert report.num_scored == 100, f"{name}: only {report.num_scored} documents scored"
        assert elapsed < budget_s, f"{name}: {elapsed:.0f}s exceeds {budget_s}s"
        lines.append(f"{name} fingerprint {report.fingerprint[:12]}")
    request.node.acceptance_detail = " | " + "; ".join(lines)
    assert not failures, "; ".join(failures)


@pytest.mark.acceptance(1, "Table 2 'Extraction (Only)' within +-3.0 F1")
def test_c1_extraction_only(request):
    check_against_table(request, EXTRACTION_ONLY, "frequency", 180)


@pytest.mark.acceptance(2, "Table 2 'TextRank (Only)' within +-3.0 F1")
def test_c2_textrank_only(request):
    check_against_table(request, TEXTRANK_ONLY, "textrank", 600)


@pytest.mark.acceptance(3, "TextRank vs frequency R-1 sign pattern (>=1 of 2)")
def test_c3_ordering(request):
    names = available()
    if not names:
        pytest.skip("public datasets not available; set " + " / ".join(DATASETS.values()))
    reproduced = []
    for name in names:
        freq = reproduce(name, "frequency")[0].means[R1].f1
        tr = reproduce(name, "textrank")[0].means[R1].f1
        # paper: TextRank wins on arXiv, frequency wins on PubMed
        reproduced.append((name, tr > freq if name == "arxiv" else freq > tr))
    request.node.acceptance_detail = " | " + ", ".join(f"{n}: {'yes' if ok else 'no'}" for n, ok in reproduced)
    assert any(ok for _, ok in reproduced)


@pytest.mark.acceptance(4, "Table 1 statistics (+-10% on real data, exact on fixture)")
def test_c4_table1(request, tmp_path):
    fixture = write_jsonl(tmp_path / "stats.jsonl", [
        {"article_id": "a", "article_text": ["one two three four five", "six seven eight nine ten"], "abstract_text": []},
        {"article_id": "b", "article_text": ["a b", "c d e", "f g", "h i j"], "abstract_text": []},
    ])
    s = dataset_stats(JsonlReader(fixture, strict=True))
    assert (s.num_docs, s.avg_sentences_per_doc, s.avg_tokens_per_doc) == (2, 3.0, 10.0)
    assert s.avg_tokens_per_sentence == 10 / 3
    one = write_jsonl(tmp_path / "one.jsonl", [{"article_id": "x", "article_text": ["w x y z"], "abstract_text": []}])
    s = dataset_stats(JsonlReader(one, strict=True))
    assert (s.num_docs, s.avg_sentences_per_doc, s.avg_tokens_per_doc, s.avg_tokens_per_sentence) == (1, 1.0, 4.0, 4.0)
    notes = ["fixture exact"]
    for name in available():
        real = dataset_stats(JsonlReader(dataset_path(name)))
        got = (real.avg_sentences_per_doc, real.avg_tokens_per_doc, real.avg_tokens_per_sentence)
        notes.append(f"{name} " + "/".join(f"{g:.0f}" for g in got))
        for g, e in zip(got, TABLE1[name]):
            assert abs(g - e) <= 0.10 * e, f"{name}: {g:.1f} vs paper {e}"
    request.node.acceptance_detail = " | " + ", ".join(notes)


@pytest.mark.acceptance(5, "ROUGE-N / LCS equal brute-force oracles on 1000 random pairs")
def test_c5_rouge_oracles():
    start = time.perf_counter()
    rng = random.Random(2024)
    vocab = [f"w{i}" for i in range(10)]
    for _ in range(1000):
        a = [rng.choice(vocab) for _ in range(rng.randint(0, 50))]
        b = [rng.choice(vocab) for _ in range(rng.randint(0, 50))]
        for n in (1, 2):
            s = rouge_n(a, b, n)
            assert (s.precision, s.recall, s.f1) == prf(*brute_clipped_overlap(a, b, n))
        a, b = a[: rng.randint(0, 12)], b[: rng.randint(0, 12)]
        assert lcs_length(a, b) == brute_lcs(a, b)
    assert time.perf_counter() - start < 30


@pytest.mark.acceptance(6, "TextRank: dense solve 1e-5, conservation 1e-3, scale invariance 1e-9")
def test_c6_textrank_numerics():
    start = time.perf_counter()
    rng = random.Random(99)
    for _ in range(200):
        n = rng.randint(1, 12)
        g = SimilarityGraph(n)
        p = rng.uniform(0.1, 1.0)
        for i in range(n):
            for j in range(i + 1, n):
                if rng.random() < p:
                    g.add_edge(i, j, rng.uniform(0.01, 5.0))
        r = rank(g)
        assert r.converged
        s = np.array(r.scores)
        assert np.max(np.abs(s - dense_rank(n, g.edges))) <= 1e-5
        if all(g.degree(i) > 0 for i in range(n)):
            assert abs(s.sum() - n) <= 1e-3
        for c in (0.01, 1, 100):
            assert np.max(np.abs(np.array(rank(g.scaled(c)).scores) - s)) <= 1e-9
    assert time.perf_counter() - start < 10


@pytest.mark.acceptance(7, "identity pipeline scores 1.0; reruns byte-identical modulo timings")
def test_c7_determinism(corpus):
    doc = make_document("self", ["The cat sat.", "Graphs rank sentences."], ["The cat sat.", "Graphs rank sentences."])
    res = run_document(doc, PipelineConfig())
    assert set(res.scores) == {R1, R2, RL}
    assert all(s == RougeScore(1.0, 1.0, 1.0) for s in res.scores.values())
    for method in ("frequency", "textrank"):
        cfg = PipelineConfig(preprocessor=method, m_policy=MPolicy.reference_length())
        a = json.dumps(strip_timings(run_corpus(corpus, cfg).to_dict()), indent=2)
        b = json.dumps(strip_timings(run_corpus(corpus, cfg).to_dict()), indent=2)
        assert a.encode() == b.encode()


@pytest.mark.acceptance(8, "backend contract: generation defaults, polish prompt bytes, retries")
def test_c8_backend_contract(monkeypatch):
    monkeypatch.setenv("LONGSUM_API_TOKEN", "token")
    summary = "We rank sentences by graph centrality."
    doc = make_document("p1", [summary], [summary])
    fast = RetryPolicy(max_attempts=3, base_backoff=0.0)
    with MockBackendServer(completion_text="Polished.") as srv:
        cfg = PipelineConfig(
            backend=BackendSpec("http_summarizer", endpoint=srv.url("/summarize"), retry=fast),
            polisher=BackendSpec("completion_polisher", endpoint=srv.url("/complete"), retry=fast),
        )
        res = run_document(doc, cfg)
        sreq, preq = srv.requests
    assert res.ok and res.polished == "Polished."
    assert sreq.json["params"] == {"length_penalty": 0.8, "num_beams": 5, "max_output_tokens": 256}
    prompt = preq.json["prompt"].encode("utf-8")
    assert prompt == b"Original " + summary.encode("utf-8") + b", Polished Sentence:"

    with MockBackendServer(fail_first=3) as srv:
        spec = BackendSpec("http_summarizer", endpoint=srv.url("/summarize"), retry=fast)
        with pytest.raises(BackendError) as info:
            summarize(spec, doc)
        assert len(srv.requests) == 3 and info.value.attempts == 3
    with MockBackendServer(fail_first=2) as srv:
        spec = BackendSpec("http_summarizer", endpoint=srv.url("/summarize"), retry=fast)
        assert summarize(spec, doc) == summary and len(srv.requests) == 3
