"""Text helpers shared by post-processing and the readability metric."""

from __future__ import annotations

import re

# A sentence ends at '.', '!' or '?' followed by whitespace or the end of text.
# Abbreviations ("e.g. this") are not special-cased.
_SENTENCE_BREAK = re.compile(r"(?<=[.!?])(\s+)")


def normalize_ws(text: str) -> str:
    return " ".join(text.split())


def split_sentences(text: str) -> list[str]:
    return [s.strip() for s in _SENTENCE_BREAK.split(text)[::2] if s.strip()]


def split_with_separators(text: str) -> list[str]:
    """Alternating [sentence, separator, sentence, ...]; joining gives ``text`` back."""
    return _SENTENCE_BREAK.split(text)
