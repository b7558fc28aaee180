"""Prompt construction, model call, and post-processing into a structured summary."""

from __future__ import annotations

import re
import sys
from dataclasses import dataclass
from importlib import resources
from typing import Any, Mapping

from .distill import DistillationConfig, DistilledReport, distill
from .gateway import ChatExchange, Gateway, ModelProfile
from .report import SandboxReport
from .text import normalize_ws, split_with_separators

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

PLACEHOLDER = "{evidence}"
NO_EVIDENCE = "(no behavioral evidence)"
FALLBACK_PARAGRAPH = "Not determined from available evidence."
DEFAULT_SECTIONS = ("Overview", "Observed Behaviors", "Impact", "Recommended Actions")


class EmptyCompletion(ValueError):
    """The model returned nothing usable."""


@dataclass(frozen=True)
class PromptTemplate:
    system_text: str
    user_scaffold: str
    required_sections: tuple[str, ...] = DEFAULT_SECTIONS

    def __post_init__(self) -> None:
        object.__setattr__(self, "required_sections", tuple(self.required_sections))
        count = self.user_scaffold.count(PLACEHOLDER)
        if count != 1:
            raise ValueError(f"user_scaffold must contain {PLACEHOLDER} exactly once (found {count})")
        if not self.system_text.strip():
            raise ValueError("system_text must be non-empty")
        if not self.required_sections:
            raise ValueError("required_sections must be non-empty")
        lowered = [h.strip().lower() for h in self.required_sections]
        if any(not h for h in lowered) or len(set(lowered)) != len(lowered):
            raise ValueError("required_sections must be non-empty and unique (case-insensitive)")

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "PromptTemplate":
        kwargs = {k: data[k] for k in ("system_text", "user_scaffold") if k in data}
        if "required_sections" in data:
            kwargs["required_sections"] = tuple(data["required_sections"])
        default = default_template()
        kwargs.setdefault("system_text", default.system_text)
        kwargs.setdefault("user_scaffold", default.user_scaffold)
        return cls(**kwargs)

    def to_dict(self) -> dict[str, Any]:
        return {
            "system_text": self.system_text,
            "user_scaffold": self.user_scaffold,
            "required_sections": list(self.required_sections),
        }


def default_template_text() -> str:
    return resources.files("malnarrate").joinpath("data/default_template.toml").read_text(encoding="utf-8")


def default_template() -> PromptTemplate:
    data = tomllib.loads(default_template_text())
    return PromptTemplate(data["system_text"], data["user_scaffold"], tuple(data["required_sections"]))


@dataclass(frozen=True)
class BehaviorSummary:
    sample_id: str
    model_name: str
    sections: tuple[tuple[str, str], ...]
    raw_completion: str

    def __post_init__(self) -> None:
        headings = [h for h, _ in self.sections]
        if len(set(headings)) != len(headings):
            raise ValueError("summary headings must be unique")
        if any(not p.strip() for _, p in self.sections):
            raise ValueError("every summary section needs a non-empty paragraph")

    @property
    def text(self) -> str:
        """Paragraphs only, as compared against reference summaries."""
        return "\n\n".join(p for _, p in self.sections)

    @property
    def word_count(self) -> int:
        return len(self.text.split())

    def render(self) -> str:
        return render_sections(self.sections)

    def to_dict(self) -> dict[str, Any]:
        return {
            "sample_id": self.sample_id,
            "model_name": self.model_name,
            "sections": [{"heading": h, "text": p} for h, p in self.sections],
            "raw_completion": self.raw_completion,
            "word_count": self.word_count,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "BehaviorSummary":
        summary = cls(
            data["sample_id"],
            data["model_name"],
            tuple((s["heading"], s["text"]) for s in data["sections"]),
            data["raw_completion"],
        )
        if "word_count" in data and data["word_count"] != summary.word_count:
            raise ValueError("word_count does not match the section text")
        return summary


def render_sections(sections) -> str:
    return "\n\n".join(f"## {h}\n{p}" for h, p in sections)


def build_prompt(template: PromptTemplate, distilled: DistilledReport) -> tuple[str, str]:
    evidence = distilled.render() if distilled.sections else NO_EVIDENCE
    return template.system_text, template.user_scaffold.replace(PLACEHOLDER, evidence)


# Leading markdown decoration a model may put in front of a heading.
_LEAD = re.compile(r"^(?:\s+|#{1,6}|>|[-*+_]+|\d+[.)])+")


def _heading_match(line: str, headings: list[tuple[str, str]]) -> tuple[str, str] | None:
    """Return (heading, inline content) if ``line`` introduces a required section."""
    body = _LEAD.sub("", line.strip())
    lowered = body.lower()
    for heading, key in headings:
        if not lowered.startswith(key):
            continue
        rest = body[len(key):].lstrip("*_ \t")
        if not rest.strip(":*_#. \t"):
            return heading, ""
        if rest.startswith(":"):
            return heading, rest[1:].strip(" \t*_")
    return None


def _dedup_sentences(text: str) -> str:
    parts = split_with_separators(text)
    out = [parts[0]]
    last = normalize_ws(parts[0])
    for i in range(1, len(parts) - 1, 2):
        sep, sentence = parts[i], parts[i + 1]
        key = normalize_ws(sentence)
        if key and key == last:
            continue
        out.extend((sep, sentence))
        last = key
    return "".join(out)


def _paragraph(chunks: list[list[str]]) -> str:
    paragraphs = []
    for chunk in chunks:
        lines: list[str] = []
        for line in chunk:
            if line:
                lines.append(line)
            elif lines and lines[-1]:
                lines.append("")
        while lines and not lines[-1]:
            lines.pop()
        if lines:
            paragraphs.append("\n".join(lines))
    return _dedup_sentences("\n\n".join(paragraphs)).strip()


def post_process(raw: str, template: PromptTemplate) -> tuple[tuple[str, str], ...]:
    """Split a completion into the template's required sections.

    Headings are matched case-insensitively and may carry markdown decoration
    or an inline ``Heading: text`` form. Text before the first heading joins
    the first section. Consecutive repeated sentences are collapsed and absent
    sections get a fixed fallback paragraph.
    """
    if not raw or not raw.strip():
        raise EmptyCompletion("completion is empty or whitespace-only")
    text = raw.replace("\r\n", "\n").replace("\r", "\n")

    # longest first so "Impact Assessment" would win over "Impact"
    keys = sorted(((h, h.strip().lower()) for h in template.required_sections), key=lambda x: -len(x[1]))
    first = template.required_sections[0]
    chunks: dict[str, list[list[str]]] = {h: [] for h in template.required_sections}
    current = [first, []]
    chunks[first].append(current[1])

    for line in text.split("\n"):
        hit = _heading_match(line, keys)
        if hit is not None:
            heading, inline = hit
            current = [heading, []]
            chunks[heading].append(current[1])
            if inline:
                current[1].append(normalize_ws(inline))
            continue
        current[1].append(normalize_ws(line))

    sections = []
    for heading in template.required_sections:
        para = _paragraph(chunks[heading])
        sections.append((heading, para or FALLBACK_PARAGRAPH))
    return tuple(sections)


def summarize_run(
    report: SandboxReport,
    cfg: DistillationConfig,
    template: PromptTemplate,
    profile: ModelProfile,
    gateway: Gateway,
) -> tuple[BehaviorSummary, ChatExchange]:
    distilled = distill(report, cfg)
    system, user = build_prompt(template, distilled)
    exchange = gateway.complete(profile, system, user)
    sections = post_process(exchange.completion_text, template)
    summary = BehaviorSummary(report.sample_id, profile.model_name, sections, exchange.completion_text)
    return summary, exchange


def summarize(
    report: SandboxReport,
    cfg: DistillationConfig,
    template: PromptTemplate,
    profile: ModelProfile,
    gateway: Gateway,
) -> BehaviorSummary:
    return summarize_run(report, cfg, template, profile, gateway)[0]
