"""Embedding-based metrics: BERTScore, semantic similarity, keyphrase matching.

All cosines are mapped from [-1, 1] onto [0, 1] with (s + 1) / 2.

BERTScore here differs from the reference implementation: tokens are embedded
one by one (no context), there is no IDF weighting and no baseline rescaling.
"""

from __future__ import annotations

from functools import lru_cache
from importlib import resources
from typing import Protocol, Sequence

import numpy as np

from .lexical import EmptyInput, tokenize


class Embedder(Protocol):
    def embed_tokens(self, tokens: Sequence[str]) -> Sequence[Sequence[float]]: ...

    def embed_text(self, text: str) -> Sequence[float]: ...


@lru_cache(maxsize=1)
def stopwords() -> frozenset[str]:
    text = resources.files("malnarrate").joinpath("data/stopwords_en.txt").read_text(encoding="utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


def _unit_rows(vectors) -> np.ndarray:
    m = np.asarray(vectors, dtype=np.float64)
    norms = np.linalg.norm(m, axis=-1, keepdims=True)
    return np.divide(m, norms, out=np.zeros_like(m), where=norms > 0)


def mapped_cosine(a, b) -> float:
    ua, ub = _unit_rows([a, b])
    s = float(np.clip(ua @ ub, -1.0, 1.0))
    return (s + 1.0) / 2.0


def bertscore(candidate: Sequence[str], reference: Sequence[str], embedder: Embedder) -> tuple[float, float, float]:
    """Greedy-matching precision, recall and F1 over token embeddings."""
    if not candidate or not reference:
        raise EmptyInput("bertscore needs non-empty candidate and reference")
    vocab = list(dict.fromkeys([*candidate, *reference]))
    index = {t: i for i, t in enumerate(vocab)}
    table = _unit_rows(embedder.embed_tokens(vocab))
    c = table[[index[t] for t in candidate]]
    r = table[[index[t] for t in reference]]
    sim = (np.clip(c @ r.T, -1.0, 1.0) + 1.0) / 2.0
    p = float(sim.max(axis=1).mean())
    rec = float(sim.max(axis=0).mean())
    f1 = 2 * p * rec / (p + rec) if p + rec > 0 else 0.0
    return p, rec, f1


def semantic_similarity(candidate: str, reference: str, embedder: Embedder) -> float:
    if not candidate or not reference:
        raise EmptyInput("semantic similarity needs two non-empty texts")
    return mapped_cosine(embedder.embed_text(candidate), embedder.embed_text(reference))


def candidate_phrases(text: str) -> list[str]:
    """Unigrams and bigrams that neither start nor end on a stopword.

    If filtering removes everything, all unigrams are used instead.
    """
    tokens = tokenize(text)
    stop = stopwords()
    phrases = [t for t in tokens if t not in stop]
    phrases += [f"{a} {b}" for a, b in zip(tokens, tokens[1:]) if a not in stop and b not in stop]
    if not phrases:
        phrases = list(tokens)
    return list(dict.fromkeys(phrases))


def top_keyphrases(text: str, embedder: Embedder, k: int = 10) -> list[str]:
    """The ``k`` phrases closest to the whole text; ties broken lexicographically."""
    if k < 1:
        raise ValueError("k must be >= 1")
    phrases = candidate_phrases(text)
    if not phrases:
        return []
    doc = _unit_rows([embedder.embed_text(text)])[0]
    vecs = _unit_rows(embedder.embed_tokens(phrases))
    scores = (np.clip(vecs @ doc, -1.0, 1.0) + 1.0) / 2.0
    ranked = sorted(zip(phrases, scores.tolist()), key=lambda ps: (-ps[1], ps[0]))
    return [p for p, _ in ranked[:k]]


def jaccard(a, b) -> float:
    a, b = set(a), set(b)
    union = a | b
    return len(a & b) / len(union) if union else 0.0


def keyphrase_match(candidate: str, reference: str, embedder: Embedder, k: int = 10) -> float:
    """Jaccard overlap of the two texts' top-k keyphrase sets."""
    if not candidate or not reference:
        raise EmptyInput("keyphrase matching needs two non-empty texts")
    return jaccard(top_keyphrases(candidate, embedder, k), top_keyphrases(reference, embedder, k))
