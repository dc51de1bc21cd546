import json
import os
import random
import tracemalloc

import pytest
from hypothesis import given, strategies as st

from longsum.dataset import (
    DatasetRecord, JsonlReader, StatsAccumulator, dataset_stats, load_jsonl, to_document,
)
from longsum.errors import DataError

from conftest import synthetic_record, write_jsonl


def rec(i, article, abstract=("summary .",)):
    return {"article_id": f"id{i}", "article_text": list(article), "abstract_text": list(abstract),
            "section_names": [], "sections": []}


@pytest.fixture
def three(tmp_path):
    return write_jsonl(tmp_path / "three.jsonl", [rec(i, [f"sentence {i}."]) for i in range(3)])


@pytest.fixture
def broken(tmp_path):
    p = tmp_path / "broken.jsonl"
    lines = [json.dumps(rec(0, ["a."])), "{not json", json.dumps(rec(2, ["c."]))]
    p.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return p


class TestLoad:
    def test_well_formed(self, three):
        records = list(load_jsonl(three))
        assert [r.article_id for r in records] == ["id0", "id1", "id2"]

    def test_lenient(self, broken):
        reader = load_jsonl(broken)
        assert len(list(reader)) == 2
        assert reader.skipped == 1 and reader.skipped_lines == [2]

    def test_strict(self, broken):
        with pytest.raises(DataError, match="line 2"):
            list(load_jsonl(broken, strict=True))

    def test_missing_field(self, tmp_path):
        p = tmp_path / "m.jsonl"
        p.write_text(json.dumps({"article_id": "x", "article_text": ["a"]}) + "\n")
        with pytest.raises(DataError, match="abstract_text"):
            list(load_jsonl(p, strict=True))
        assert list(load_jsonl(p)) == []

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="cannot read"):
            list(load_jsonl(tmp_path / "nope.jsonl"))

    def test_limit_is_first_k_in_file_order(self, three):
        assert [r.article_id for r in load_jsonl(three, limit=2)] == ["id0", "id1"]

    def test_is_lazy(self, tmp_path):
        p = tmp_path / "lazy.jsonl"
        p.write_text(json.dumps(rec(0, ["a."])) + "\n{broken\n")
        it = iter(load_jsonl(p, strict=True))
        assert next(it).article_id == "id0"
        with pytest.raises(DataError):
            next(it)

    def test_record_round_trip(self):
        r = DatasetRecord.from_json(rec(1, ["x", "y"]))
        assert DatasetRecord.from_json(r.to_json()) == r


class TestToDocument:
    def test_basic(self):
        doc = to_document(DatasetRecord.from_json(rec(0, ["One.", "Two."], ["<S> abstract . </S>"])))
        assert len(doc) == 2 and len(doc.reference) == 1
        assert doc.reference[0].text == "abstract ."

    def test_truncation(self):
        doc = to_document(DatasetRecord.from_json(rec(0, [f"s{i}" for i in range(5)])), take_first_k_sentences=1)
        assert len(doc) == 1

    def test_empty_abstract(self):
        doc = to_document(DatasetRecord.from_json(rec(0, ["a."], [])))
        assert doc.reference is None

    def test_empty_article_rejected(self):
        with pytest.raises(DataError, match="id0"):
            to_document(DatasetRecord.from_json(rec(0, [])))

    @given(st.lists(st.text(min_size=0, max_size=30), min_size=1, max_size=6))
    def test_round_trip(self, sentences):
        doc = to_document(DatasetRecord.from_json(rec(0, sentences)))
        assert doc.texts == sentences


class TestStats:
    def test_single(self):
        s = dataset_stats([DatasetRecord.from_json(rec(0, ["one two three four"]))])
        assert (s.num_docs, s.avg_sentences_per_doc, s.avg_tokens_per_doc, s.avg_tokens_per_sentence) == (1, 1.0, 4.0, 4.0)

    def test_two_docs(self):
        a = rec(0, ["w " * 5, "w " * 5])
        b = rec(1, ["w w", "w w w", "w w", "w w w"])
        s = dataset_stats([DatasetRecord.from_json(a), DatasetRecord.from_json(b)])
        assert (s.num_docs, s.avg_sentences_per_doc, s.avg_tokens_per_doc) == (2, 3.0, 10.0)
        assert s.avg_tokens_per_sentence == pytest.approx(10 / 3)

    def test_empty_input(self):
        with pytest.raises(DataError):
            dataset_stats([])

    def test_permutation_invariant_and_mergeable(self):
        rng = random.Random(4)
        records = [DatasetRecord.from_json(synthetic_record(i, rng)) for i in range(20)]
        s1 = dataset_stats(records)
        shuffled = records[:]
        rng.shuffle(shuffled)
        assert dataset_stats(shuffled) == s1
        left, right = StatsAccumulator(), StatsAccumulator()
        for r in records[:7]:
            left.add(r)
        for r in records[7:]:
            right.add(r)
        assert left.merge(right).result() == s1
        assert s1.avg_tokens_per_doc >= s1.avg_tokens_per_sentence


def test_streaming_memory_is_bounded(tmp_path):
    """Peak Python allocation stays flat while reading a large file."""
    size_gb = float(os.environ.get("LONGSUM_STREAM_TEST_GB", "0"))
    target = int(size_gb * 2**30) if size_gb else 40 * 2**20
    rng = random.Random(0)
    line = json.dumps(synthetic_record(0, rng, n_sent=40)) + "\n"
    p = tmp_path / "big.jsonl"
    with open(p, "w") as fh:
        written = 0
        while written < target:
            fh.write(line)
            written += len(line)
    tracemalloc.start()
    stats = dataset_stats(JsonlReader(p))
    _, peak = tracemalloc.get_traced_memory()
    tracemalloc.stop()
    assert stats.num_docs == target // len(line) + (target % len(line) > 0)
    assert peak < 2 * 2**20
