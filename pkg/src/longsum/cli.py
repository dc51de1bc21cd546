"""``longsum`` command-line entry point.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 backend error,
4 internal error, 130 interrupted (partial report written).
"""

from __future__ import annotations

import json
import logging
import sys
from typing import Optional

import click

from .backend import set_max_in_flight
from .dataset import JsonlReader, clean_abstract_sentence, dataset_stats, to_document
from .errors import BackendError, ConfigError, DataError, LongsumError
from .frequency import WordWeights, freq_extract
from .pipeline import CorpusReport, PipelineConfig, compare_reports, run_corpus, score_pairs
from .rouge import RougeVariant
from .selection import MPolicy
from .text import load_stopwords
from .textrank import RankConfig, textrank_extract

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_BACKEND, EXIT_INTERNAL = 0, 1, 2, 3, 4
EXIT_INTERRUPTED = 130

log = logging.getLogger("longsum")

CONTEXT = {"max_content_width": 100, "terminal_width": 100, "help_option_names": ["-h", "--help"]}


class Interrupted(Exception):
    pass


def _emit(text: str, out: Optional[str]) -> None:
    if out and out != "-":
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def _stopwords(path):
    try:
        return load_stopwords(path)
    except OSError as exc:
        raise DataError(f"cannot read stopword file {path}: {exc}") from None


@click.group(context_settings=CONTEXT)
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def cli(verbose):
    """Extractive pre-processing, summarization pipelines and ROUGE evaluation."""
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )


@cli.command("stats", context_settings=CONTEXT)
@click.option("--input", "input_path", required=True, help="Dataset JSONL file.")
@click.option("--strict", is_flag=True, help="Abort on the first malformed line.")
@click.option("--json", "as_json", is_flag=True, help="Print a JSON object instead of text.")
@click.option("--limit", type=int, default=None, help="Only read the first N records.")
def cmd_stats(input_path, strict, as_json, limit):
    """Corpus statistics: documents, sentences and tokens."""
    reader = JsonlReader(input_path, strict=strict, limit=limit)
    stats = dataset_stats(reader)
    if reader.skipped:
        click.echo(f"warning: skipped {reader.skipped} malformed line(s)", err=True)
    if as_json:
        click.echo(json.dumps(stats.as_dict(), indent=2))
    else:
        click.echo(f"num_docs                 {stats.num_docs}")
        click.echo(f"avg_sentences_per_doc    {stats.avg_sentences_per_doc:.2f}")
        click.echo(f"avg_tokens_per_doc       {stats.avg_tokens_per_doc:.2f}")
        click.echo(f"avg_tokens_per_sentence  {stats.avg_tokens_per_sentence:.2f}")


@cli.command("extract", context_settings=CONTEXT)
@click.option("--input", "input_path", required=True, help="Dataset JSONL file.")
@click.option("--method", type=click.Choice(["freq", "textrank"]), required=True,
              help="Extraction algorithm.")
@click.option("--m-policy", default=None,
              help="fixed:K, ref or ratio:P  [default: ref for freq, ratio:0.2 for textrank]")
@click.option("--stopwords", "stopwords_path", default=None,
              help="Stopword file, one word per line  [default: built-in English list]")
@click.option("--weights", "weights_path", default=None, help="word<TAB>weight file (freq only).")
@click.option("--damping", type=float, default=0.85, show_default=True, help="TextRank damping factor.")
@click.option("--epsilon", type=float, default=1e-6, show_default=True,
              help="TextRank convergence threshold.")
@click.option("--max-iterations", type=int, default=100, show_default=True,
              help="TextRank iteration cap.")
@click.option("--limit", type=int, default=None, help="Only process the first N records.")
@click.option("--strict", is_flag=True, help="Abort on the first malformed line.")
@click.option("--out", default=None, help="Output JSONL path  [default: stdout]")
def cmd_extract(input_path, method, m_policy, stopwords_path, weights_path, damping, epsilon,
                max_iterations, limit, strict, out):
    """Write one extracted summary per document as JSONL."""
    stops = _stopwords(stopwords_path)
    if m_policy is None:
        policy = MPolicy.reference_length() if method == "freq" else MPolicy.ratio(0.2)
    else:
        policy = MPolicy.parse(m_policy)
    try:
        rank_cfg = RankConfig(damping, epsilon, max_iterations)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    weights = WordWeights()
    if weights_path:
        try:
            weights = WordWeights.from_file(weights_path)
        except OSError as exc:
            raise DataError(f"cannot read weight file {weights_path}: {exc}") from None
        except ValueError as exc:
            raise DataError(str(exc)) from None
    lines = []
    for record in JsonlReader(input_path, strict=strict, limit=limit):
        doc = to_document(record)
        if method == "freq":
            ext = freq_extract(doc, stops, weights, policy)
        else:
            ext = textrank_extract(doc, stops, rank_cfg, policy)
        lines.append(json.dumps({
            "id": ext.id,
            "indices": list(ext.origins),
            "sentences": ext.texts,
            "summary": " ".join(ext.texts),
            "reference": None if ext.reference is None else [s.text for s in ext.reference],
        }, ensure_ascii=False))
    _emit("".join(line + "\n" for line in lines), out)


def _read_summaries(path: str, role: str) -> dict[str, list[str]]:
    """Map id -> sentences from JSONL lines.

    Accepted shapes: ``{"id", "summary": str}``, ``{"id", "sentences": [...]}``
    and dataset records (``article_id`` + ``abstract_text``) for references.
    """
    out: dict[str, list[str]] = {}
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {role} file {path}: {exc}") from None
    with fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: line {lineno}: {exc}") from None
            if "article_id" in obj and "abstract_text" in obj:
                doc_id = str(obj["article_id"])
                sents = [clean_abstract_sentence(s) for s in obj["abstract_text"]]
            elif "id" in obj and isinstance(obj.get("summary"), str):
                doc_id, sents = str(obj["id"]), [obj["summary"]]
            elif "id" in obj and isinstance(obj.get("sentences"), list):
                doc_id, sents = str(obj["id"]), list(obj["sentences"])
            else:
                raise DataError(f"{path}: line {lineno}: expected id + summary or sentences")
            if doc_id in out:
                raise DataError(f"{path}: line {lineno}: duplicate id {doc_id!r}")
            out[doc_id] = sents
    return out


@cli.command("score", context_settings=CONTEXT)
@click.option("--candidates", required=True, help="JSONL of candidate summaries.")
@click.option("--references", required=True, help="JSONL of reference summaries or dataset records.")
@click.option("--variants", default="r1,r2,rl", show_default=True, help="Comma-separated ROUGE variants.")
@click.option("--csv", "csv_path", default=None, help="Also write per-variant means as CSV.")
@click.option("--out", default=None, help="JSON report path  [default: stdout]")
@click.option("--label", default="scores", show_default=True, help="Report label.")
def cmd_score(candidates, references, variants, csv_path, out, label):
    """Score candidate summaries against references with ROUGE."""
    vs = RougeVariant.parse_list(variants)
    cands = _read_summaries(candidates, "candidates")
    refs = _read_summaries(references, "references")
    for doc_id in cands:
        if doc_id not in refs:
            raise DataError(f"candidate id {doc_id!r} has no reference")
    for doc_id in refs:
        if doc_id not in cands:
            raise DataError(f"reference id {doc_id!r} has no candidate")
    pairs = ((i, " ".join(c), refs[i]) for i, c in cands.items())
    report = score_pairs(pairs, vs, label=label)
    if csv_path:
        _emit(report.to_csv(), csv_path)
    _emit(report.to_json(), out)
    _summarize(report)


def _summarize(report: CorpusReport) -> None:
    parts = [f"{v.label} {100 * s.f1:.2f}" for v, s in report.means.items()]
    click.echo(
        f"{report.label}: scored {report.num_scored}/{report.num_documents}"
        + (f" ({', '.join(parts)})" if parts else ""),
        err=True,
    )
    for w in report.warnings:
        click.echo(f"warning: {w}", err=True)


@cli.command("run", context_settings=CONTEXT)
@click.option("--config", "config_path", required=True, help="Pipeline config (JSON).")
@click.option("--input", "input_path", default=None, help="Dataset JSONL (overrides config).")
@click.option("--limit", type=int, default=None, help="First-N documents (overrides config).")
@click.option("--preprocessor", type=click.Choice(["none", "frequency", "textrank"]), default=None,
              help="Override the config's preprocessor.")
@click.option("--m-policy", default=None, help="Override the M-policy: fixed:K, ref or ratio:P.")
@click.option("--damping", type=float, default=None, help="Override the TextRank damping factor.")
@click.option("--label", default=None, help="Report label (overrides config).")
@click.option("--workers", type=int, default=None, help="Worker threads  [default: CPU count]")
@click.option("--max-in-flight", type=int, default=4, show_default=True,
              help="Concurrent remote requests.")
@click.option("--out", default=None, help="JSON report path  [default: stdout]")
@click.option("--csv", "csv_path", default=None, help="Also write per-variant means as CSV.")
def cmd_run(config_path, input_path, limit, preprocessor, m_policy, damping, label, workers,
            max_in_flight, out, csv_path):
    """Run a full pipeline over a dataset and write a report."""
    cfg = PipelineConfig.from_file(config_path)
    rank = None
    if damping is not None:
        try:
            rank = RankConfig(damping, cfg.rank.epsilon, cfg.rank.max_iterations)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    cfg = cfg.with_overrides(
        input=input_path, limit=limit, preprocessor=preprocessor, label=label, workers=workers,
        m_policy=MPolicy.parse(m_policy) if m_policy else None, rank=rank,
    )
    if cfg.input is None:
        raise ConfigError("no input dataset: set 'input' in the config or pass --input")
    set_max_in_flight(max_in_flight)
    report = run_corpus(cfg.input, cfg)
    if csv_path:
        _emit(report.to_csv(), csv_path)
    _emit(report.to_json(), out)
    _summarize(report)
    if report.incomplete:
        raise Interrupted()
    if report.num_documents and report.num_scored == 0:
        stages = set(report.failures_by_stage)
        if stages & {"backend", "polish"}:
            raise BackendError("every document failed in a remote stage", attempts=0)
        raise DataError("no document could be scored")


@cli.command("report", context_settings=CONTEXT)
@click.option("--inputs", required=True, multiple=True,
              help="Report JSON files; repeat the flag or list paths after it.")
@click.argument("more", nargs=-1)
@click.option("--csv", "as_csv", is_flag=True, help="Emit CSV instead of an aligned table.")
def cmd_report(inputs, more, as_csv):
    """Compare corpus reports side by side (F1 means, best per column starred)."""
    reports = [CorpusReport.from_file(p) for p in (*inputs, *more)]
    table = compare_reports(reports)
    click.echo(table.to_csv() if as_csv else table.render_text(), nl=False)


def main(argv=None) -> int:
    try:
        cli.main(args=argv, prog_name="longsum", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.UsageError as exc:
        exc.show()
        return EXIT_USAGE
    except click.Abort:
        click.echo("aborted", err=True)
        return EXIT_INTERRUPTED
    except Interrupted:
        click.echo("interrupted: partial report written", err=True)
        return EXIT_INTERRUPTED
    except ConfigError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_USAGE
    except DataError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_DATA
    except BackendError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_BACKEND
    except LongsumError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001 - last-resort mapping to exit 4
        log.debug("internal error", exc_info=True)
        click.echo(f"internal error: {type(exc).__name__}: {exc}", err=True)
        return EXIT_INTERNAL
    return EXIT_OK


def entry() -> None:
    sys.exit(main())
