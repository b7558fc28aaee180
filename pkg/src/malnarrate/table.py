"""Per-model mean scores rendered as a comparison table, one row per model."""

from __future__ import annotations

from collections import defaultdict
from statistics import fmean
from typing import Iterable

from .metrics import COLUMNS
from .records import EvaluationRecord

HEADERS = tuple(abbr for abbr, _ in COLUMNS)


class NoRecords(ValueError):
    pass


def model_means(records: Iterable[EvaluationRecord]) -> dict[str, dict[str, float]]:
    """Arithmetic mean of every metric per model, over successful records only."""
    grouped: dict[str, list] = defaultdict(list)
    for record in records:
        if record.ok:
            grouped[record.model_name].append(record.metrics)
    return {
        model: {name: fmean(getattr(m, name) for m in vectors) for _, name in COLUMNS}
        for model, vectors in sorted(grouped.items())
    }


def render_table(records: Iterable[EvaluationRecord], markdown: bool = True) -> str:
    """One row per model, 4-decimal cells.

    In markdown mode the best value of each column is bolded when more than one
    model is compared.
    """
    means = model_means(records)
    if not means:
        raise NoRecords("no successful evaluation records to tabulate")
    rows = {model: [f"{vals[name]:.4f}" for _, name in COLUMNS] for model, vals in means.items()}

    if markdown:
        if len(rows) > 1:
            for col, (_, name) in enumerate(COLUMNS):
                best = max(means[m][name] for m in means)
                best_cell = f"{best:.4f}"
                for model in rows:
                    if rows[model][col] == best_cell:
                        rows[model][col] = f"**{best_cell}**"
        lines = ["| Model | " + " | ".join(HEADERS) + " |", "|---|" + "---:|" * len(HEADERS)]
        lines += [f"| {model} | " + " | ".join(cells) + " |" for model, cells in rows.items()]
        return "\n".join(lines) + "\n"

    model_width = max(len("Model"), *(len(m) for m in rows))
    widths = [max(len(h), 7 if h != "FKR" else 8) for h in HEADERS]
    header = "Model".ljust(model_width) + "  " + "  ".join(h.rjust(w) for h, w in zip(HEADERS, widths))
    lines = [header.rstrip()]
    for model, cells in rows.items():
        lines.append(model.ljust(model_width) + "  " + "  ".join(c.rjust(w) for c, w in zip(cells, widths)))
    return "\n".join(lines) + "\n"
