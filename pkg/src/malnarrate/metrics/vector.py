"""The 11-score metric vector for one (generated, reference) pair."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import Any, Mapping

from .lexical import EmptyInput, TooShort, distinct_n, rouge_l, rouge_n, tokenize
from .readability import flesch_reading_ease
from .semantic import Embedder, bertscore, keyphrase_match, semantic_similarity

# (table abbreviation, field name), in table column order
COLUMNS = (
    ("R-1", "rouge1_f"),
    ("R-2", "rouge2_f"),
    ("R-L", "rougeL_f"),
    ("BS-P", "bertscore_p"),
    ("BS-R", "bertscore_r"),
    ("BS-F1", "bertscore_f1"),
    ("SS", "semantic_similarity"),
    ("FKR", "readability"),
    ("D-1", "distinct1"),
    ("D-2", "distinct2"),
    ("KM", "keyphrase_match"),
)


@dataclass(frozen=True)
class MetricVector:
    rouge1_f: float
    rouge2_f: float
    rougeL_f: float
    bertscore_p: float
    bertscore_r: float
    bertscore_f1: float
    semantic_similarity: float
    readability: float
    distinct1: float
    distinct2: float
    keyphrase_match: float

    def __post_init__(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            upper = 100.0 if f.name == "readability" else 1.0
            if not isinstance(value, (int, float)) or not math.isfinite(value) or not 0.0 <= value <= upper:
                raise ValueError(f"{f.name}={value!r} outside [0, {upper:g}]")

    def to_dict(self) -> dict[str, float]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "MetricVector":
        return cls(**{f.name: float(data[f.name]) for f in fields(cls)})


class MetricEvaluationError(RuntimeError):
    """One or more embedding-backed metrics failed; ``partial`` holds the rest."""

    def __init__(self, failures: dict[str, Exception], partial: dict[str, float]):
        detail = "; ".join(f"{name}: {type(exc).__name__}: {exc}" for name, exc in failures.items())
        super().__init__(f"metric failures: {detail}")
        self.failures = failures
        self.partial = partial


def _unit(x: float) -> float:
    # fp noise in cosine sums can step just past the bounds
    return min(1.0, max(0.0, x))


def evaluate_texts(
    generated: str,
    reference: str,
    embedder: Embedder,
    keyphrase_k: int = 10,
) -> tuple[MetricVector, dict[str, str]]:
    """All 11 metrics plus flags for values that were defaulted to 0.

    Lexical metrics cannot fail. Provider failures in the embedding metrics
    are collected and raised together as :class:`MetricEvaluationError`.
    """
    if not reference:
        raise ValueError("reference must be non-empty")
    cand = tokenize(generated)
    ref = tokenize(reference)
    flags: dict[str, str] = {}
    values: dict[str, float] = {
        "rouge1_f": rouge_n(cand, ref, 1),
        "rouge2_f": rouge_n(cand, ref, 2),
        "rougeL_f": rouge_l(cand, ref),
    }
    for name, n in (("distinct1", 1), ("distinct2", 2)):
        try:
            values[name] = distinct_n(cand, n)
        except TooShort as exc:
            values[name] = 0.0
            flags[name] = f"too_short: {exc}"
    try:
        values["readability"] = flesch_reading_ease(generated)
    except EmptyInput as exc:
        values["readability"] = 0.0
        flags["readability"] = f"empty_input: {exc}"

    failures: dict[str, Exception] = {}
    try:
        p, r, f1 = bertscore(cand, ref, embedder)
        values.update(bertscore_p=_unit(p), bertscore_r=_unit(r), bertscore_f1=_unit(f1))
    except EmptyInput as exc:
        values.update(bertscore_p=0.0, bertscore_r=0.0, bertscore_f1=0.0)
        flags["bertscore"] = f"empty_input: {exc}"
    except Exception as exc:  # noqa: BLE001
        failures["bertscore"] = exc
    try:
        values["semantic_similarity"] = _unit(semantic_similarity(generated, reference, embedder))
    except EmptyInput as exc:
        values["semantic_similarity"] = 0.0
        flags["semantic_similarity"] = f"empty_input: {exc}"
    except Exception as exc:  # noqa: BLE001
        failures["semantic_similarity"] = exc
    try:
        values["keyphrase_match"] = keyphrase_match(generated, reference, embedder, keyphrase_k)
    except EmptyInput as exc:
        values["keyphrase_match"] = 0.0
        flags["keyphrase_match"] = f"empty_input: {exc}"
    except Exception as exc:  # noqa: BLE001
        failures["keyphrase_match"] = exc

    if failures:
        raise MetricEvaluationError(failures, values)
    return MetricVector(**values), flags


def evaluate_pair(generated, reference: str, embedder: Embedder, keyphrase_k: int = 10) -> MetricVector:
    """Score a :class:`BehaviorSummary` (or plain text) against a reference."""
    text = generated if isinstance(generated, str) else generated.text
    return evaluate_texts(text, reference, embedder, keyphrase_k)[0]
