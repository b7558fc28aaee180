"""Flesch Reading Ease with a vowel-group syllable heuristic.

Scores are clamped to [0, 100]; higher means easier to read.
"""

from __future__ import annotations

import re

from ..text import split_sentences
from .lexical import EmptyInput, tokenize

_VOWEL_RUN = re.compile(r"[aeiouy]+")


def count_syllables(word: str) -> int:
    """Vowel-group count, minus one for a silent trailing 'e', never below 1."""
    if not word:
        raise ValueError("word must be non-empty")
    w = word.lower()
    count = len(_VOWEL_RUN.findall(w))
    # silent e: a lone final 'e' after a consonant ("code"), not "ee"/"ie" ("agree")
    if w.endswith("e") and (len(w) < 2 or w[-2] not in "aeiouy") and count - 1 >= 1:
        count -= 1
    return max(count, 1)


def flesch_from_counts(words: int, sentences: int, syllables: int) -> float:
    """Unclamped Flesch Reading Ease."""
    return 206.835 - 1.015 * (words / sentences) - 84.6 * (syllables / words)


def text_counts(text: str) -> tuple[int, int, int]:
    """(words, sentences, syllables) as the readability score counts them."""
    words = tokenize(text)
    sentences = sum(1 for s in split_sentences(text) if tokenize(s))
    return len(words), max(sentences, 1 if words else 0), sum(count_syllables(w) for w in words)


def flesch_reading_ease(text: str) -> float:
    words, sentences, syllables = text_counts(text)
    if words == 0:
        raise EmptyInput("text contains no words")
    return min(100.0, max(0.0, flesch_from_counts(words, sentences, syllables)))
