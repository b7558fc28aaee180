"""Tokenization and the lexical overlap / diversity metrics."""

from __future__ import annotations

import re
from collections import Counter
from typing import Sequence

from .kernels import lcs_length

_TOKEN = re.compile(r"[^\W_]+")


class EmptyInput(ValueError):
    """A metric precondition on non-empty input was violated."""


class TooShort(ValueError):
    """Fewer tokens than the n-gram order."""


def tokenize(text: str) -> list[str]:
    """Lowercase and split on every run of non-alphanumeric characters."""
    return _TOKEN.findall(text.lower())


def ngrams(tokens: Sequence[str], n: int) -> list[tuple[str, ...]]:
    return [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def _f1(overlap: int, n_candidate: int, n_reference: int) -> float:
    if overlap == 0 or n_candidate == 0 or n_reference == 0:
        return 0.0
    p = overlap / n_candidate
    r = overlap / n_reference
    return 2 * p * r / (p + r)


def rouge_n(candidate: Sequence[str], reference: Sequence[str], n: int) -> float:
    """ROUGE-N F1 with clipped n-gram counts."""
    if n not in (1, 2):
        raise ValueError("n must be 1 or 2")
    cand = Counter(ngrams(candidate, n))
    ref = Counter(ngrams(reference, n))
    overlap = sum((cand & ref).values())
    return _f1(overlap, sum(cand.values()), sum(ref.values()))


def rouge_l(candidate: Sequence[str], reference: Sequence[str]) -> float:
    """ROUGE-L F1 from the longest common subsequence length."""
    if not candidate or not reference:
        return 0.0
    ids: dict[str, int] = {}
    a = [ids.setdefault(t, len(ids)) for t in candidate]
    b = [ids.setdefault(t, len(ids)) for t in reference]
    return _f1(lcs_length(a, b), len(a), len(b))


def distinct_n(tokens: Sequence[str], n: int) -> float:
    """Unique n-grams over total n-grams of one text."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if len(tokens) < n:
        raise TooShort(f"need at least {n} tokens, got {len(tokens)}")
    grams = ngrams(tokens, n)
    return len(set(grams)) / len(grams)
