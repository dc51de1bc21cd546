"""End-to-end runs: extract -> summarize -> polish -> score.

A :class:`PipelineConfig` is a declarative description of one run; a
:class:`CorpusReport` holds per-document results, corpus means and a
fingerprint of everything that affects the numbers.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import os
import time
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass, field, fields, replace
from typing import Any, Iterable, Optional, Sequence

from .backend import (
    BackendSpec, GenerationParams, InputLimits, RetryPolicy, polish, summarize, truncate_to_limit,
)
from .dataset import JsonlReader, to_document
from .errors import BackendError, ConfigError, DataError
from .frequency import WordWeights, freq_extract
from .rouge import DEFAULT_VARIANTS, MeanAccumulator, RougeScore, RougeVariant, score_tokens
from .selection import MPolicy
from .text import Document, StopwordList, default_stopwords, load_stopwords, make_document, tokenize
from .textrank import RankConfig, textrank_extract

log = logging.getLogger(__name__)

PREPROCESSORS = ("none", "frequency", "textrank")
TIMING_FIELDS = ("timings", "wall_time_s")
ROUGE_SETTINGS = {
    "tokenizer": "lowercase, split on non-alphanumeric runs",
    "stemming": False,
    "stopwords_removed": False,
    "rouge_l": "summary-level LCS",
    "aggregate": "mean of per-document scores",
}


@dataclass(frozen=True)
class PipelineConfig:
    preprocessor: str = "none"
    m_policy: Optional[MPolicy] = None
    backend: BackendSpec = field(default_factory=BackendSpec)
    polisher: Optional[BackendSpec] = None
    variants: tuple[RougeVariant, ...] = DEFAULT_VARIANTS
    limit: Optional[int] = None
    rank: RankConfig = field(default_factory=RankConfig)
    weights: WordWeights = field(default_factory=WordWeights)
    stopwords: StopwordList = field(default_factory=default_stopwords)
    stopwords_path: Optional[str] = None
    weights_path: Optional[str] = None
    input: Optional[str] = None
    workers: Optional[int] = None
    strict: bool = False
    label: Optional[str] = None

    def __post_init__(self):
        if self.preprocessor not in PREPROCESSORS:
            raise ConfigError(f"unknown preprocessor {self.preprocessor!r}; expected one of {PREPROCESSORS}")
        if self.backend.kind == "completion_polisher":
            raise ConfigError("the summarization backend cannot be a completion_polisher")
        if self.polisher is not None and self.polisher.kind != "completion_polisher":
            raise ConfigError("polisher must have kind completion_polisher")
        if self.limit is not None and self.limit < 0:
            raise ConfigError("limit must be >= 0")
        if self.workers is not None and self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not self.variants:
            raise ConfigError("at least one ROUGE variant is required")

    @property
    def policy(self) -> MPolicy:
        if self.m_policy is not None:
            return self.m_policy
        return MPolicy.ratio(0.2) if self.preprocessor == "textrank" else MPolicy.reference_length()

    @property
    def name(self) -> str:
        if self.label:
            return self.label
        parts = [self.preprocessor if self.preprocessor != "none" else "full-text"]
        if self.preprocessor != "none":
            parts[0] += f"[{self.policy}]"
        parts.append(self.backend.kind)
        if self.polisher is not None:
            parts.append("polish")
        return "+".join(parts)

    def fingerprint_data(self) -> dict:
        data = {
            "preprocessor": self.preprocessor,
            "m_policy": str(self.policy) if self.preprocessor != "none" else None,
            "stopwords": {"sha256": self.stopwords.content_hash, "count": len(self.stopwords)},
            "variants": [v.name for v in self.variants],
            "rouge": ROUGE_SETTINGS,
            "backend": self.backend.public_dict(),
            "polisher": None if self.polisher is None else self.polisher.public_dict(),
            "limit": self.limit,
        }
        if self.preprocessor == "textrank":
            data["rank"] = {
                "damping": self.rank.damping,
                "epsilon": self.rank.epsilon,
                "max_iterations": self.rank.max_iterations,
            }
        if self.preprocessor == "frequency":
            overrides = json.dumps(sorted(self.weights.overrides.items()))
            data["weights"] = {
                "default": self.weights.default_weight,
                "overrides_sha256": hashlib.sha256(overrides.encode()).hexdigest(),
            }
        return data

    def fingerprint(self) -> str:
        canon = json.dumps(self.fingerprint_data(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()

    # -- config files -------------------------------------------------------

    @classmethod
    def from_dict(cls, data: dict, base_dir: Optional[str] = None) -> "PipelineConfig":
        """Build a config from its JSON form; unknown keys raise :class:`ConfigError`."""
        data = dict(data)
        allowed = {
            "preprocessor", "m_policy", "backend", "polisher", "variants", "limit", "rank",
            "weights", "stopwords", "input", "workers", "strict", "label",
        }
        _reject_unknown(data, allowed, "")
        kw: dict[str, Any] = {}
        for key in ("preprocessor", "limit", "workers", "strict", "label"):
            if key in data:
                kw[key] = data[key]
        if data.get("m_policy") is not None:
            kw["m_policy"] = MPolicy.parse(str(data["m_policy"]))
        if "variants" in data:
            kw["variants"] = RougeVariant.parse_list(data["variants"])
        if "backend" in data:
            kw["backend"] = backend_from_dict(data["backend"], "backend")
        if data.get("polisher") is not None:
            kw["polisher"] = backend_from_dict(data["polisher"], "polisher")
        if "rank" in data:
            _reject_unknown(data["rank"], {f.name for f in fields(RankConfig)}, "rank.")
            try:
                kw["rank"] = RankConfig(**data["rank"])
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        if data.get("stopwords") is not None:
            path = _resolve(data["stopwords"], base_dir)
            kw["stopwords_path"] = path
            kw["stopwords"] = _load_stopwords(path)
        if data.get("weights") is not None:
            path = _resolve(data["weights"], base_dir)
            kw["weights_path"] = path
            kw["weights"] = _load_weights(path)
        if data.get("input") is not None:
            kw["input"] = _resolve(data["input"], base_dir)
        try:
            return cls(**kw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"config {path} must be a JSON object")
        return cls.from_dict(data, base_dir=os.path.dirname(os.path.abspath(path)))

    def to_dict(self) -> dict:
        return {
            "preprocessor": self.preprocessor,
            "m_policy": str(self.policy),
            "backend": self.backend.public_dict(),
            "polisher": None if self.polisher is None else self.polisher.public_dict(),
            "variants": [v.short for v in self.variants],
            "limit": self.limit,
            "rank": {
                "damping": self.rank.damping,
                "epsilon": self.rank.epsilon,
                "max_iterations": self.rank.max_iterations,
            },
            "weights": self.weights_path,
            "stopwords": self.stopwords_path,
            "input": self.input,
            "workers": self.workers,
            "strict": self.strict,
            "label": self.label,
        }

    def with_overrides(self, **overrides) -> "PipelineConfig":
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})


def _resolve(path: str, base_dir: Optional[str]) -> str:
    if base_dir and not os.path.isabs(path):
        return os.path.join(base_dir, path)
    return path


def _load_stopwords(path: str) -> StopwordList:
    try:
        return load_stopwords(path)
    except OSError as exc:
        raise DataError(f"cannot read stopword file {path}: {exc}") from None


def _load_weights(path: str) -> WordWeights:
    try:
        return WordWeights.from_file(path)
    except OSError as exc:
        raise DataError(f"cannot read weight file {path}: {exc}") from None
    except ValueError as exc:
        raise DataError(str(exc)) from None


def _reject_unknown(data, allowed: set, prefix: str) -> None:
    if not isinstance(data, dict):
        raise ConfigError(f"config section {prefix.rstrip('.') or '<root>'} must be an object")
    for key in data:
        if key not in allowed:
            raise ConfigError(f"unknown config key {prefix}{key!r}")


def backend_from_dict(data: dict, where: str) -> BackendSpec:
    _reject_unknown(data, {"kind", "endpoint", "generation", "limits", "auth_env", "retry"}, where + ".")
    try:
        gen = data.get("generation") or {}
        _reject_unknown(gen, {f.name for f in fields(GenerationParams)}, where + ".generation.")
        retry = data.get("retry") or {}
        _reject_unknown(retry, {f.name for f in fields(RetryPolicy)}, where + ".retry.")
        limits = data.get("limits")
        if isinstance(limits, str):
            limits = InputLimits.preset(limits)
        elif isinstance(limits, int):
            limits = InputLimits(limits)
        elif limits is not None:
            _reject_unknown(limits, {"max_input_tokens"}, where + ".limits.")
            limits = InputLimits(**limits)
        return BackendSpec(
            kind=data.get("kind", "identity"),
            endpoint=data.get("endpoint"),
            generation=GenerationParams(**gen),
            limits=limits,
            auth_env=data.get("auth_env"),
            retry=RetryPolicy(**retry),
        )
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from None


@dataclass
class PipelineResult:
    doc_id: str
    extracted_indices: Optional[list[int]] = None
    summary: Optional[str] = None
    polished: Optional[str] = None
    polish_fallback: bool = False
    scores: Optional[dict[RougeVariant, RougeScore]] = None
    timings: dict[str, float] = field(default_factory=dict)
    error: Optional[dict] = None

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def final_text(self) -> Optional[str]:
        return self.polished if self.polished is not None else self.summary

    def to_dict(self) -> dict:
        return {
            "id": self.doc_id,
            "extracted_indices": self.extracted_indices,
            "summary": self.summary,
            "polished": self.polished,
            "polish_fallback": self.polish_fallback,
            "scores": None
            if self.scores is None
            else {v.name: s.as_dict() for v, s in self.scores.items()},
            "error": self.error,
            "timings": self.timings,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineResult":
        scores = d.get("scores")
        return cls(
            doc_id=d["id"],
            extracted_indices=d.get("extracted_indices"),
            summary=d.get("summary"),
            polished=d.get("polished"),
            polish_fallback=d.get("polish_fallback", False),
            scores=None
            if scores is None
            else {RougeVariant.parse(k): RougeScore(**v) for k, v in scores.items()},
            timings=d.get("timings") or {},
            error=d.get("error"),
        )


def failed(doc_id: str, stage: str, exc: BaseException, result: Optional[PipelineResult] = None):
    result = result or PipelineResult(doc_id)
    err = {"stage": stage, "type": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, BackendError):
        err["attempts"] = exc.attempts
    result.error = err
    result.scores = None
    return result


def extract(doc: Document, cfg: PipelineConfig) -> Document:
    if cfg.preprocessor == "frequency":
        return freq_extract(doc, cfg.stopwords, cfg.weights, cfg.policy)
    if cfg.preprocessor == "textrank":
        return textrank_extract(doc, cfg.stopwords, cfg.rank, cfg.policy)
    return doc


def run_document(doc: Document, cfg: PipelineConfig, *, client=None, sleep=time.sleep) -> PipelineResult:
    """Run every stage on one document; stage failures land in ``result.error``."""
    res = PipelineResult(doc.id)
    clock = time.perf_counter

    t = clock()
    try:
        extracted = extract(doc, cfg)
    except Exception as exc:  # stage isolation: never let one document kill a corpus
        return failed(doc.id, "preprocess", exc, res)
    res.timings["preprocess"] = clock() - t
    if cfg.preprocessor != "none":
        res.extracted_indices = list(extracted.origins)
        # downstream stages see text only, as a remote model would
        ref = [s.text for s in doc.reference] if doc.reference else None
        retok = make_document(doc.id, extracted.texts, ref)
        extracted = replace(retok, source_indices=extracted.source_indices)

    t = clock()
    try:
        res.summary = summarize(cfg.backend, truncate_to_limit(extracted, cfg.backend.limits),
                                client=client, sleep=sleep)
    except Exception as exc:
        return failed(doc.id, "backend", exc, res)
    res.timings["backend"] = clock() - t

    if cfg.polisher is not None:
        t = clock()
        try:
            out = polish(cfg.polisher, res.summary, doc_id=doc.id, client=client, sleep=sleep)
        except Exception as exc:
            return failed(doc.id, "polish", exc, res)
        res.polished, res.polish_fallback = out.text, out.fallback
        res.timings["polish"] = clock() - t

    t = clock()
    ref_norms = doc.reference_norms()
    if not ref_norms:
        return failed(doc.id, "score", DataError("document has no reference summary"), res)
    cand = [tok.norm for tok in tokenize(res.final_text)]
    res.scores = score_tokens(cand, ref_norms, cfg.variants)
    res.timings["score"] = clock() - t
    return res


@dataclass
class CorpusReport:
    label: str
    variants: tuple[RougeVariant, ...]
    documents: list[PipelineResult] = field(default_factory=list)
    means: dict[RougeVariant, RougeScore] = field(default_factory=dict)
    num_documents: int = 0
    num_scored: int = 0
    num_failed: int = 0
    failures_by_stage: dict[str, int] = field(default_factory=dict)
    fingerprint: Optional[str] = None
    fingerprint_data: Optional[dict] = None
    config: Optional[dict] = None
    warnings: list[str] = field(default_factory=list)
    skipped_lines: int = 0
    incomplete: bool = False
    wall_time_s: Optional[float] = None

    @classmethod
    def build(cls, label, variants, results: Sequence[PipelineResult], **extra) -> "CorpusReport":
        acc = MeanAccumulator()
        stages: dict[str, int] = {}
        for r in results:
            if r.scores is not None:
                acc.add({v: r.scores[v] for v in variants})
            else:
                stage = (r.error or {}).get("stage", "unknown")
                stages[stage] = stages.get(stage, 0) + 1
        report = cls(
            label=label,
            variants=tuple(variants),
            documents=list(results),
            means=acc.means(),
            num_documents=len(results),
            num_scored=acc.count,
            num_failed=len(results) - acc.count,
            failures_by_stage=dict(sorted(stages.items())),
            **extra,
        )
        if report.num_scored == 0:
            report.warnings.append("no documents were scored")
        return report

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "variants": [v.name for v in self.variants],
            "num_documents": self.num_documents,
            "num_scored": self.num_scored,
            "num_failed": self.num_failed,
            "failures_by_stage": self.failures_by_stage,
            "skipped_lines": self.skipped_lines,
            "incomplete": self.incomplete,
            "warnings": self.warnings,
            "means": {v.name: s.as_dict() for v, s in self.means.items()},
            "fingerprint": self.fingerprint,
            "fingerprint_data": self.fingerprint_data,
            "config": self.config,
            "wall_time_s": self.wall_time_s,
            "documents": [r.to_dict() for r in self.documents],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["variant", "precision", "recall", "f1", "num_scored"])
        for v, s in self.means.items():
            w.writerow([v.name, f"{s.precision:.6f}", f"{s.recall:.6f}", f"{s.f1:.6f}", self.num_scored])
        return buf.getvalue()

    @classmethod
    def from_dict(cls, d: dict) -> "CorpusReport":
        try:
            return cls(
                label=d["label"],
                variants=tuple(RougeVariant.parse(v) for v in d["variants"]),
                documents=[PipelineResult.from_dict(r) for r in d.get("documents", [])],
                means={RougeVariant.parse(k): RougeScore(**v) for k, v in d["means"].items()},
                num_documents=d["num_documents"],
                num_scored=d["num_scored"],
                num_failed=d.get("num_failed", 0),
                failures_by_stage=d.get("failures_by_stage", {}),
                fingerprint=d.get("fingerprint"),
                fingerprint_data=d.get("fingerprint_data"),
                config=d.get("config"),
                warnings=d.get("warnings", []),
                skipped_lines=d.get("skipped_lines", 0),
                incomplete=d.get("incomplete", False),
                wall_time_s=d.get("wall_time_s"),
            )
        except (KeyError, TypeError, ConfigError) as exc:
            raise DataError(f"not a corpus report: {exc}") from None

    @classmethod
    def from_file(cls, path) -> "CorpusReport":
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.from_dict(json.load(fh))
        except OSError as exc:
            raise DataError(f"cannot read report {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise DataError(f"report {path} is not valid JSON: {exc}") from None


def strip_timings(report: dict) -> dict:
    """Copy of a serialized report without wall-clock fields."""
    out = {k: v for k, v in report.items() if k not in TIMING_FIELDS}
    out["documents"] = [
        {k: v for k, v in d.items() if k not in TIMING_FIELDS} for d in report.get("documents", [])
    ]
    return out


def _process_record(record, cfg: PipelineConfig, client, sleep) -> PipelineResult:
    try:
        doc = to_document(record)
    except (DataError, ValueError) as exc:
        return failed(record.article_id, "load", exc)
    return run_document(doc, cfg, client=client, sleep=sleep)


def run_corpus(
    path,
    cfg: PipelineConfig,
    *,
    workers: Optional[int] = None,
    client=None,
    sleep=time.sleep,
) -> CorpusReport:
    """Run the pipeline over the first ``cfg.limit`` records of a JSONL file.

    Documents are processed by a bounded thread pool; results keep file
    order. A KeyboardInterrupt stops submission, drains in-flight documents
    and returns a report flagged ``incomplete``.
    """
    started = time.perf_counter()
    reader = JsonlReader(path, strict=cfg.strict, limit=cfg.limit)
    n_workers = workers or cfg.workers or os.cpu_count() or 1
    results: dict[int, PipelineResult] = {}
    incomplete = False
    records = iter(reader)
    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        pending = {}
        idx = 0
        try:
            exhausted = False
            while True:
                while not exhausted and len(pending) < n_workers * 2:
                    rec = next(records, None)
                    if rec is None:
                        exhausted = True
                        break
                    pending[pool.submit(_process_record, rec, cfg, client, sleep)] = idx
                    idx += 1
                if not pending:
                    break
                done, _ = wait(pending, return_when=FIRST_COMPLETED)
                for fut in done:
                    results[pending.pop(fut)] = fut.result()
        except KeyboardInterrupt:
            incomplete = True
            log.warning("interrupted; draining %d in-flight document(s)", len(pending))
            for fut in list(pending):
                if fut.cancel():
                    pending.pop(fut)
            for fut, i in pending.items():
                results[i] = fut.result()
    ordered = [results[i] for i in sorted(results)]
    report = CorpusReport.build(
        cfg.name,
        cfg.variants,
        ordered,
        fingerprint=cfg.fingerprint(),
        fingerprint_data=cfg.fingerprint_data(),
        config=cfg.to_dict(),
        skipped_lines=reader.skipped,
        incomplete=incomplete,
    )
    if incomplete:
        report.warnings.append("run interrupted; report is partial")
    report.wall_time_s = time.perf_counter() - started
    return report


@dataclass
class ComparisonRow:
    label: str
    num_scored: int
    f1: dict[RougeVariant, float]
    best: dict[RougeVariant, bool]


@dataclass
class ComparisonTable:
    variants: tuple[RougeVariant, ...]
    rows: list[ComparisonRow]

    def render_text(self) -> str:
        """Aligned table of F1 x 100; ``*`` marks the best value per column."""
        header = ["Config", "N"] + [v.label for v in self.variants]
        body = []
        for r in self.rows:
            cells = [r.label, str(r.num_scored)]
            for v in self.variants:
                cells.append(f"{100 * r.f1[v]:.2f}{'*' if r.best[v] else ' '}")
            body.append(cells)
        widths = [max(len(row[i]) for row in [header] + body) for i in range(len(header))]
        lines = []
        for k, row in enumerate([header] + body):
            lines.append("  ".join(
                c.ljust(widths[i]) if i == 0 else c.rjust(widths[i]) for i, c in enumerate(row)
            ).rstrip())
            if k == 0:
                lines.append("  ".join("-" * w for w in widths))
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        head = ["config", "num_scored"]
        for v in self.variants:
            head += [f"{v.short}_f1", f"{v.short}_best"]
        w.writerow(head)
        for r in self.rows:
            row = [r.label, r.num_scored]
            for v in self.variants:
                row += [f"{r.f1[v]:.6f}", int(r.best[v])]
            w.writerow(row)
        return buf.getvalue()


def compare_reports(reports: Sequence[CorpusReport]) -> ComparisonTable:
    if not reports:
        raise ConfigError("need at least one report to compare")
    variants = tuple(reports[0].variants)
    for r in reports[1:]:
        if set(r.variants) != set(variants):
            raise DataError(
                f"report {r.label!r} has variants {[v.name for v in r.variants]}, "
                f"expected {[v.name for v in variants]}"
            )
    f1 = [{v: (r.means[v].f1 if v in r.means else 0.0) for v in variants} for r in reports]
    best_val = {v: max(row[v] for row in f1) for v in variants}
    rows = [
        ComparisonRow(r.label, r.num_scored, row, {v: row[v] == best_val[v] for v in variants})
        for r, row in zip(reports, f1)
    ]
    return ComparisonTable(variants, rows)


def score_pairs(
    pairs: Iterable[tuple[str, str, Sequence[str]]],
    variants: Sequence[RougeVariant] = DEFAULT_VARIANTS,
    label: str = "scores",
) -> CorpusReport:
    """Score ``(id, candidate_text, reference_sentences)`` triples directly."""
    results = []
    for doc_id, cand, ref in pairs:
        res = PipelineResult(doc_id, summary=cand)
        ref_norms = [t.norm for s in ref for t in tokenize(s)]
        if not ref_norms:
            results.append(failed(doc_id, "score", DataError("empty reference"), res))
            continue
        res.scores = score_tokens([t.norm for t in tokenize(cand)], ref_norms, variants)
        results.append(res)
    fp_data = {"variants": [v.name for v in variants], "rouge": ROUGE_SETTINGS}
    fp = hashlib.sha256(json.dumps(fp_data, sort_keys=True).encode()).hexdigest()
    return CorpusReport.build(label, variants, results, fingerprint=fp, fingerprint_data=fp_data)
