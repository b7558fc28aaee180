"""Turn a parsed report into the budgeted evidence text that is sent to the model.

Provenance (timestamps, sizes, hashes, durations) is dropped in two ways:
argument keys matching ``excluded_fields`` are skipped outright, and any
remaining free-text value is scrubbed of hash- and timestamp-shaped substrings.
Whatever survives is cut to ``token_budget`` from the lowest-priority end.
"""

from __future__ import annotations

import fnmatch
import math
import re
from dataclasses import dataclass
from itertools import accumulate

from .report import ApiCall, SandboxReport

SECTIONS = ("signatures", "processes", "network", "dropped_files")

SECTION_TITLES = {
    "signatures": "Triggered signatures",
    "processes": "Processes and API activity",
    "network": "Network activity",
    "dropped_files": "Dropped files",
}

DEFAULT_EXCLUDED_FIELDS = frozenset({
    "*time*",
    "*duration*",
    "*size*",
    "*length*",
    "*hash*",
    "*md5*",
    "*sha1*",
    "*sha256*",
    "*sha512*",
    "*crc32*",
    "*ssdeep*",
    "*imphash*",
})

# Free-text values can still carry digests or timestamps (signature marks,
# command lines); these are replaced by a neutral token.
_REDACTIONS = (
    (re.compile(r"(?<![0-9A-Za-z])(?:[0-9A-Fa-f]{128}|[0-9A-Fa-f]{64}|[0-9A-Fa-f]{40}|[0-9A-Fa-f]{32})(?![0-9A-Za-z])"), "<hash>"),
    (re.compile(r"\d{4}-\d{2}-\d{2}[ T]\d{2}:\d{2}(?::\d{2}(?:[.,]\d+)?)?(?:Z|[+-]\d{2}:?\d{2})?"), "<timestamp>"),
    (re.compile(r"(?<![\w.])1[0-9]{9}\.[0-9]+(?![\w.])"), "<timestamp>"),
)

CALL_ELISION = "… {n} more calls omitted"
LINE_ELISION = "… {n} more lines omitted"
SECTION_ELISION = "… omitted sections: {names}"


class BudgetTooSmall(ValueError):
    """The token budget cannot hold even the first section header."""


@dataclass(frozen=True)
class DistillationConfig:
    excluded_fields: frozenset[str] = DEFAULT_EXCLUDED_FIELDS
    token_budget: int = 3000
    section_priority: tuple[str, ...] = SECTIONS
    max_calls_per_process: int = 20

    def __post_init__(self) -> None:
        object.__setattr__(self, "excluded_fields", frozenset(p.lower() for p in self.excluded_fields))
        object.__setattr__(self, "section_priority", tuple(self.section_priority))
        if self.token_budget <= 0:
            raise ValueError("token_budget must be > 0")
        if self.max_calls_per_process <= 0:
            raise ValueError("max_calls_per_process must be > 0")
        if sorted(self.section_priority) != sorted(SECTIONS):
            raise ValueError(f"section_priority must be a permutation of {list(SECTIONS)}")

    def excludes(self, path: str) -> bool:
        path = path.lower()
        leaf = path.rsplit(".", 1)[-1]
        return any(fnmatch.fnmatchcase(leaf, p) or fnmatch.fnmatchcase(path, p) for p in self.excluded_fields)


@dataclass(frozen=True)
class DistilledReport:
    sample_id: str
    sections: tuple[tuple[str, str], ...] = ()
    estimated_tokens: int = 0

    def render(self) -> str:
        return render_sections(self.sections)


def render_sections(sections) -> str:
    return "\n\n".join(text for _, text in sections)


def estimate_tokens(text: str) -> int:
    """Rough token count: one token per four UTF-8 bytes, rounded up."""
    return math.ceil(len(text.encode("utf-8")) / 4)


def scrub(text: str) -> str:
    for pattern, repl in _REDACTIONS:
        text = pattern.sub(repl, text)
    return text


def _clean(text: str) -> str:
    return scrub(" ".join(str(text).split()))


def _render_call(call: ApiCall, cfg: DistillationConfig) -> str:
    args = [
        f"{_clean(k)}={_clean(v)}"
        for k, v in call.arguments.items()
        if not cfg.excludes(f"processes.calls.arguments.{k}")
    ]
    line = f"  - {_clean(call.api_name)}"
    if call.category:
        line += f" [{_clean(call.category)}]"
    if args:
        line += " " + ", ".join(args)
    if not call.status:
        line += " (failed)"
    return line


def _signature_lines(report: SandboxReport, cfg: DistillationConfig) -> list[str]:
    lines = []
    for sig in report.signatures:
        line = f"- {_clean(sig.name)} (severity {sig.severity})"
        if sig.description:
            line += f": {_clean(sig.description)}"
        if sig.marks:
            line += " | indicators: " + "; ".join(_clean(m) for m in sig.marks)
        lines.append(line)
    return lines


def _process_lines(report: SandboxReport, cfg: DistillationConfig) -> list[str]:
    lines = []
    for proc in report.processes:
        line = f"- process {proc.pid} {_clean(proc.process_name) or '<unnamed>'}"
        if proc.parent_pid is not None:
            line += f" (parent {proc.parent_pid})"
        if proc.command_line:
            line += f" cmd: {_clean(proc.command_line)}"
        lines.append(line)
        calls = proc.api_calls
        for call in calls[: cfg.max_calls_per_process]:
            lines.append(_render_call(call, cfg))
        if len(calls) > cfg.max_calls_per_process:
            lines.append("  " + CALL_ELISION.format(n=len(calls) - cfg.max_calls_per_process))
    return lines


def _network_lines(report: SandboxReport, cfg: DistillationConfig) -> list[str]:
    net = report.network
    lines = [f"- DNS query: {_clean(d)}" for d in net.dns_queries]
    lines += [f"- HTTP {_clean(h.method)} {_clean(h.host)}{_clean(h.path)}" for h in net.http_requests]
    for ep in net.contacted_ips:
        target = ep.address if ep.port is None else f"{ep.address}:{ep.port}"
        lines.append(f"- connection to {_clean(target)}")
    return lines


def _dropped_lines(report: SandboxReport, cfg: DistillationConfig) -> list[str]:
    lines = []
    for d in report.dropped_files:
        line = f"- {_clean(d.path)}"
        if d.file_type:
            line += f" ({_clean(d.file_type)})"
        lines.append(line)
    return lines


_RENDERERS = {
    "signatures": _signature_lines,
    "processes": _process_lines,
    "network": _network_lines,
    "dropped_files": _dropped_lines,
}


def _assemble(blocks: list[tuple[str, list[str]]], keep: int) -> list[tuple[str, str]]:
    """Keep the first ``keep`` lines (headers included) and mark what was cut."""
    sections: list[tuple[str, list[str]]] = []
    remaining = keep
    omitted_lines = 0
    dropped_names: list[str] = []
    for name, lines in blocks:
        if remaining <= 0:
            dropped_names.append(name)
            continue
        taken = lines[:remaining]
        remaining -= len(taken)
        omitted_lines = len(lines) - len(taken)
        sections.append((name, list(taken)))
    if sections and (omitted_lines or dropped_names):
        tail = sections[-1][1]
        if omitted_lines:
            tail.append(LINE_ELISION.format(n=omitted_lines))
        if dropped_names:
            tail.append(SECTION_ELISION.format(names=", ".join(dropped_names)))
    return [(name, "\n".join(lines)) for name, lines in sections]


def _size(sections: list[tuple[str, str]]) -> int:
    return len(render_sections(sections).encode("utf-8"))


def distill(report: SandboxReport, cfg: DistillationConfig | None = None) -> DistilledReport:
    """Filter provenance out of ``report`` and fit the rest into ``cfg.token_budget``.

    Sections follow ``cfg.section_priority``; empty ones are skipped. When the
    rendering is over budget the longest line prefix that fits (with elision
    markers) is kept, so a larger budget never loses content a smaller one had.
    """
    cfg = cfg or DistillationConfig()
    blocks = []
    for name in cfg.section_priority:
        lines = _RENDERERS[name](report, cfg)
        if lines:
            blocks.append((name, [f"## {SECTION_TITLES[name]}"] + lines))
    if not blocks:
        return DistilledReport(report.sample_id, (), 0)

    limit = 4 * cfg.token_budget
    total = sum(len(lines) for _, lines in blocks)
    full = _assemble(blocks, total)
    if _size(full) <= limit:
        chosen = full
    else:
        # byte size of a prefix grows with `keep` except for the marker digits,
        # so scan every cut and keep the longest that fits
        prefix = list(accumulate(len(line.encode("utf-8")) for _, lines in blocks for line in lines))
        chosen = None
        for keep in range(total - 1, 0, -1):
            if prefix[keep - 1] > limit:
                continue
            candidate = _assemble(blocks, keep)
            if _size(candidate) <= limit:
                chosen = candidate
                break
        if chosen is None:
            raise BudgetTooSmall(
                f"token_budget {cfg.token_budget} cannot hold the {blocks[0][0]} section header"
            )

    sections = tuple(chosen)
    return DistilledReport(report.sample_id, sections, estimate_tokens(render_sections(sections)))
