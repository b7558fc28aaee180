"""Summary quality metrics: lexical overlap, embedding similarity, readability, diversity."""

from .kernels import BACKEND, lcs_length
from .lexical import EmptyInput, TooShort, distinct_n, ngrams, rouge_l, rouge_n, tokenize
from .readability import count_syllables, flesch_from_counts, flesch_reading_ease, text_counts
from .semantic import (
    Embedder,
    bertscore,
    candidate_phrases,
    jaccard,
    keyphrase_match,
    semantic_similarity,
    top_keyphrases,
)
from .vector import COLUMNS, MetricEvaluationError, MetricVector, evaluate_pair, evaluate_texts

__all__ = [
    "BACKEND",
    "COLUMNS",
    "Embedder",
    "EmptyInput",
    "MetricEvaluationError",
    "MetricVector",
    "TooShort",
    "bertscore",
    "candidate_phrases",
    "count_syllables",
    "distinct_n",
    "evaluate_pair",
    "evaluate_texts",
    "flesch_from_counts",
    "flesch_reading_ease",
    "jaccard",
    "keyphrase_match",
    "lcs_length",
    "ngrams",
    "rouge_l",
    "rouge_n",
    "semantic_similarity",
    "text_counts",
    "tokenize",
]
