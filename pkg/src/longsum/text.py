"""Tokenization, sentence segmentation and stopword handling."""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Sequence

# Maximal runs of alphanumerics; ``[^\W_]`` is exactly ``str.isalnum``.
_WORD_RE = re.compile(r"[^\W_]+")
# A run of terminators followed by whitespace or end of input.
_TERMINATOR_RE = re.compile(r"[.!?]+(?=\s|$)")
_LAST_WORD_RE = re.compile(r"\S+$")

ABBREVIATIONS = frozenset(
    {
        "al.", "approx.", "cf.", "dr.", "e.g.", "eq.", "eqs.", "fig.", "figs.",
        "i.e.", "mr.", "mrs.", "ms.", "no.", "prof.", "ref.", "refs.", "resp.",
        "sec.", "sect.", "st.", "tab.", "vs.", "viz.",
    }
)


@dataclass(frozen=True)
class Token:
    surface: str
    norm: str


@dataclass(frozen=True)
class Sentence:
    index: int
    text: str
    tokens: tuple[Token, ...]

    @property
    def norms(self) -> list[str]:
        return [t.norm for t in self.tokens]


@dataclass(frozen=True)
class Document:
    """A sequence of sentences plus an optional reference summary.

    ``source_indices`` maps each sentence back to its position in the
    document it was extracted from; ``None`` means the document is not an
    extract (positions are the identity).
    """

    id: str
    sentences: tuple[Sentence, ...]
    reference: Optional[tuple[Sentence, ...]] = None
    source_indices: Optional[tuple[int, ...]] = None

    def __len__(self) -> int:
        return len(self.sentences)

    @property
    def texts(self) -> list[str]:
        return [s.text for s in self.sentences]

    @property
    def origins(self) -> tuple[int, ...]:
        if self.source_indices is None:
            return tuple(range(len(self.sentences)))
        return self.source_indices

    def norms(self) -> list[str]:
        return [t.norm for s in self.sentences for t in s.tokens]

    def reference_norms(self) -> list[str]:
        if not self.reference:
            return []
        return [t.norm for s in self.reference for t in s.tokens]


@dataclass(frozen=True)
class StopwordList:
    words: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        for w in self.words:
            if not w or w != w.lower() or any(c.isspace() for c in w):
                raise ValueError(f"stopword {w!r} is not normalized")

    def __contains__(self, word: str) -> bool:
        return word in self.words

    def __len__(self) -> int:
        return len(self.words)

    @property
    def content_hash(self) -> str:
        payload = "\n".join(sorted(self.words)).encode("utf-8")
        return hashlib.sha256(payload).hexdigest()

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> "StopwordList":
        """Parse one word per line; blank lines and ``#`` comments are ignored.

        Entries that do not survive normalization as a single token
        (e.g. ``don't``) can never match a token and are dropped.
        """
        words = set()
        for line in lines:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            toks = tokenize(line)
            if len(toks) == 1 and toks[0].surface == line:
                words.add(toks[0].norm)
        return cls(frozenset(words))

    @classmethod
    def from_file(cls, path) -> "StopwordList":
        with open(path, encoding="utf-8") as fh:
            return cls.from_lines(fh)

    @classmethod
    def empty(cls) -> "StopwordList":
        return cls(frozenset())


_DEFAULT_STOPWORDS: Optional[StopwordList] = None


def default_stopwords() -> StopwordList:
    """The built-in English list shipped in ``longsum/data``."""
    global _DEFAULT_STOPWORDS
    if _DEFAULT_STOPWORDS is None:
        data = resources.files("longsum").joinpath("data/stopwords_en.txt")
        _DEFAULT_STOPWORDS = StopwordList.from_lines(
            data.read_text(encoding="utf-8").splitlines()
        )
    return _DEFAULT_STOPWORDS


def load_stopwords(path: Optional[str | Path] = None) -> StopwordList:
    return default_stopwords() if path is None else StopwordList.from_file(path)


def _normalize(surface: str) -> str:
    return "".join(c for c in surface.lower() if c.isalnum())


def tokenize(text: str) -> list[Token]:
    """Split ``text`` on every maximal run of non-alphanumeric characters.

    Each token keeps its surface form; ``norm`` is the lowercased form.
    Digits are ordinary token characters.
    """
    out = []
    for surface in _WORD_RE.findall(text):
        norm = _normalize(surface)
        # lower() can expand a char into non-alphanumerics (e.g. dotted I)
        if norm:
            out.append(Token(surface, norm))
    return out


def count_tokens(text: str) -> int:
    return len(_WORD_RE.findall(text))


def segment_sentences(raw: str) -> list[str]:
    """Split ad-hoc text into sentences.

    A split happens after ``.``, ``!`` or ``?`` when followed by whitespace
    or end of input, unless the word ending in ``.`` is a known
    abbreviation such as ``Fig.`` or ``et al.``.
    """
    segments = []
    start = 0
    for m in _TERMINATOR_RE.finditer(raw):
        end = m.end()
        if m.group() == ".":
            word = _LAST_WORD_RE.search(raw, 0, end).group()
            if word.lower() in ABBREVIATIONS:
                continue
        seg = raw[start:end].strip()
        if seg:
            segments.append(seg)
        start = end
    tail = raw[start:].strip()
    if tail:
        segments.append(tail)
    return segments


def remove_stopwords(tokens: Sequence[Token], stops: StopwordList) -> list[Token]:
    return [t for t in tokens if t.norm not in stops.words]


def make_sentences(texts: Iterable[str]) -> tuple[Sentence, ...]:
    return tuple(Sentence(i, t, tuple(tokenize(t))) for i, t in enumerate(texts))


def make_document(
    doc_id: str,
    sentences: Iterable[str],
    reference: Optional[Iterable[str]] = None,
) -> Document:
    """Build a document from pre-segmented sentence strings.

    An empty or missing reference yields ``reference=None``.
    """
    ref = make_sentences(reference) if reference is not None else None
    return Document(str(doc_id), make_sentences(sentences), ref or None)


def document_from_text(doc_id: str, raw: str, reference: Optional[str] = None) -> Document:
    ref = segment_sentences(reference) if reference is not None else None
    return make_document(doc_id, segment_sentences(raw), ref)
