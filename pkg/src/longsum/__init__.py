"""Long-document summarization toolkit.

Extractive pre-processing (frequency-driven and TextRank), pluggable remote
summarization and polishing backends, and a from-scratch ROUGE evaluator.
"""

from .backend import BackendSpec, GenerationParams, InputLimits, RetryPolicy, polish, summarize
from .dataset import DatasetRecord, DatasetStats, dataset_stats, load_jsonl, to_document
from .frequency import WordWeights, freq_extract, sentence_values, word_values
from .pipeline import CorpusReport, PipelineConfig, compare_reports, run_corpus, run_document
from .rouge import RougeScore, RougeVariant, lcs_length, rouge_l, rouge_n, score_document
from .selection import MPolicy, ScoredSentence, resolve_m, select_top_m
from .text import (
    Document, Sentence, StopwordList, Token, default_stopwords, make_document,
    remove_stopwords, segment_sentences, tokenize,
)
from .textrank import RankConfig, build_graph, rank, similarity, textrank_extract

__version__ = "0.1.0"
