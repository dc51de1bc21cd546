"""Reading the arXiv/PubMed summarization JSONL releases.

Each line is one article::

    {"article_id": ..., "article_text": [sentence, ...],
     "abstract_text": [sentence, ...], "section_names": [...], "sections": [[...], ...]}
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import asdict, dataclass
from typing import Iterable, Iterator, Optional

from .errors import DataError
from .text import count_tokens, make_document, Document

log = logging.getLogger(__name__)

REQUIRED_FIELDS = ("article_id", "article_text", "abstract_text")
# Abstract sentences in the public release are wrapped as "<S> ... </S>".
_SENT_TAG_RE = re.compile(r"</?S>")


@dataclass(frozen=True)
class DatasetRecord:
    article_id: str
    article_text: tuple[str, ...]
    abstract_text: tuple[str, ...]
    section_names: tuple[str, ...] = ()
    sections: tuple[tuple[str, ...], ...] = ()

    @classmethod
    def from_json(cls, obj) -> "DatasetRecord":
        if not isinstance(obj, dict):
            raise DataError("record is not a JSON object")
        missing = [f for f in REQUIRED_FIELDS if f not in obj]
        if missing:
            raise DataError(f"missing required field(s): {', '.join(missing)}")
        if not _is_str_list(obj["article_text"]) or not _is_str_list(obj["abstract_text"]):
            raise DataError("article_text and abstract_text must be lists of strings")
        return cls(
            article_id=str(obj["article_id"]),
            article_text=tuple(obj["article_text"]),
            abstract_text=tuple(obj["abstract_text"]),
            section_names=tuple(obj.get("section_names") or ()),
            sections=tuple(tuple(sec) for sec in (obj.get("sections") or ())),
        )

    def to_json(self) -> dict:
        d = asdict(self)
        d["sections"] = [list(s) for s in self.sections]
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}


def _is_str_list(v) -> bool:
    return isinstance(v, list) and all(isinstance(x, str) for x in v)


class JsonlReader:
    """Lazily iterate over the records of a JSONL file.

    In lenient mode malformed lines are skipped and tallied in ``skipped``;
    in strict mode the first malformed line raises :class:`DataError`
    carrying its line number.
    """

    def __init__(self, path, strict: bool = False, limit: Optional[int] = None):
        self.path = path
        self.strict = strict
        self.limit = limit
        self.skipped = 0
        self.skipped_lines: list[int] = []

    def __iter__(self) -> Iterator[DatasetRecord]:
        emitted = 0
        if self.limit is not None and self.limit <= 0:
            return
        try:
            fh = open(self.path, encoding="utf-8")
        except OSError as exc:
            raise DataError(f"cannot read {self.path}: {exc}") from exc
        with fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    record = DatasetRecord.from_json(json.loads(line))
                except (json.JSONDecodeError, DataError) as exc:
                    msg = f"{self.path}: line {lineno}: {exc}"
                    if self.strict:
                        raise DataError(msg) from None
                    log.warning("skipping %s", msg)
                    self.skipped += 1
                    self.skipped_lines.append(lineno)
                    continue
                yield record
                emitted += 1
                if self.limit is not None and emitted >= self.limit:
                    return


def load_jsonl(path, strict: bool = False, limit: Optional[int] = None) -> JsonlReader:
    return JsonlReader(path, strict=strict, limit=limit)


def clean_abstract_sentence(text: str) -> str:
    return _SENT_TAG_RE.sub("", text).strip()


def to_document(record: DatasetRecord, take_first_k_sentences: Optional[int] = None) -> Document:
    """Article sentences become the document, abstract sentences the reference.

    Article sentences are kept verbatim; ``<S>``/``</S>`` wrappers are
    stripped from the abstract.
    """
    if not record.article_text:
        raise DataError(f"record {record.article_id!r} has empty article_text")
    sentences = record.article_text
    if take_first_k_sentences is not None:
        if take_first_k_sentences < 1:
            raise ValueError("take_first_k_sentences must be >= 1")
        sentences = sentences[:take_first_k_sentences]
    reference = [s for s in map(clean_abstract_sentence, record.abstract_text) if s]
    return make_document(record.article_id, sentences, reference or None)


@dataclass
class DatasetStats:
    num_docs: int
    avg_sentences_per_doc: float
    avg_tokens_per_doc: float
    avg_tokens_per_sentence: float

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class StatsAccumulator:
    """Sufficient statistics for :class:`DatasetStats`; merges associatively."""

    docs: int = 0
    sentences: int = 0
    tokens: int = 0

    def add(self, record: DatasetRecord) -> None:
        self.docs += 1
        self.sentences += len(record.article_text)
        self.tokens += sum(count_tokens(s) for s in record.article_text)

    def merge(self, other: "StatsAccumulator") -> "StatsAccumulator":
        return StatsAccumulator(
            self.docs + other.docs, self.sentences + other.sentences, self.tokens + other.tokens
        )

    def result(self) -> DatasetStats:
        if not self.docs:
            raise DataError("cannot compute statistics over zero records")
        return DatasetStats(
            num_docs=self.docs,
            avg_sentences_per_doc=self.sentences / self.docs,
            avg_tokens_per_doc=self.tokens / self.docs,
            avg_tokens_per_sentence=self.tokens / self.sentences if self.sentences else 0.0,
        )


def dataset_stats(records: Iterable[DatasetRecord]) -> DatasetStats:
    """Article-text statistics in one streaming pass (stopwords counted)."""
    acc = StatsAccumulator()
    for record in records:
        acc.add(record)
    return acc.result()
