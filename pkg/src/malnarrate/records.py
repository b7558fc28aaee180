"""Ground-truth ingestion and the JSON Lines results store."""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping

from .metrics import MetricVector
from .summarizer import BehaviorSummary


class DuplicateSample(ValueError):
    pass


class MalformedLine(ValueError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no


@dataclass(frozen=True)
class GroundTruthEntry:
    sample_id: str
    reference_text: str
    source_notes: str | None = None

    def __post_init__(self) -> None:
        if not self.sample_id:
            raise ValueError("sample_id must be non-empty")
        if not self.reference_text.strip():
            raise ValueError("reference_text must be non-empty")


def load_ground_truth(path: str | Path) -> list[GroundTruthEntry]:
    """Read a UTF-8 JSON Lines file of ``{sample_id, reference_text[, source_notes]}`` objects."""
    entries: list[GroundTruthEntry] = []
    seen: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except ValueError as exc:
                raise MalformedLine(line_no, f"invalid JSON ({exc})") from None
            if not isinstance(obj, dict):
                raise MalformedLine(line_no, "expected a JSON object")
            sid, ref = obj.get("sample_id"), obj.get("reference_text")
            if not isinstance(sid, str) or not sid:
                raise MalformedLine(line_no, "sample_id must be a non-empty string")
            if not isinstance(ref, str) or not ref.strip():
                raise MalformedLine(line_no, "reference_text must be a non-empty string")
            notes = obj.get("source_notes")
            if notes is not None and not isinstance(notes, str):
                raise MalformedLine(line_no, "source_notes must be a string")
            if sid in seen:
                raise DuplicateSample(f"sample_id {sid!r} appears on lines {seen[sid]} and {line_no}")
            seen[sid] = line_no
            entries.append(GroundTruthEntry(sid, ref, notes))
    return entries


@dataclass(frozen=True)
class EvaluationRecord:
    """One (sample, model) outcome. Failed runs carry ``error`` and no summary/metrics."""

    sample_id: str
    model_name: str
    summary: BehaviorSummary | None
    metrics: MetricVector | None
    run_meta: Mapping[str, Any] = field(default_factory=dict)
    error: Mapping[str, str] | None = None

    def __post_init__(self) -> None:
        if self.error is None and (self.summary is None or self.metrics is None):
            raise ValueError("successful records need both summary and metrics")

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def sort_key(self) -> tuple[str, str]:
        return self.sample_id, self.model_name

    def to_dict(self) -> dict[str, Any]:
        return {
            "sample_id": self.sample_id,
            "model_name": self.model_name,
            "status": "ok" if self.ok else "error",
            "summary": self.summary.to_dict() if self.summary else None,
            "metrics": self.metrics.to_dict() if self.metrics else None,
            "run_meta": dict(self.run_meta),
            "error": dict(self.error) if self.error else None,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "EvaluationRecord":
        return cls(
            sample_id=data["sample_id"],
            model_name=data["model_name"],
            summary=BehaviorSummary.from_dict(data["summary"]) if data.get("summary") else None,
            metrics=MetricVector.from_dict(data["metrics"]) if data.get("metrics") else None,
            run_meta=data.get("run_meta") or {},
            error=data.get("error"),
        )


def read_records(path: str | Path) -> list[EvaluationRecord]:
    with open(path, encoding="utf-8") as fh:
        return [EvaluationRecord.from_dict(json.loads(line)) for line in fh if line.strip()]


class RecordWriter:
    """Serialized append-only sink; every record is flushed and fsynced as it lands."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "w", encoding="utf-8")
        self._lock = threading.Lock()

    def append(self, record: EvaluationRecord) -> None:
        line = record.to_json() + "\n"
        with self._lock:
            self._fh.write(line)
            self._fh.flush()
            os.fsync(self._fh.fileno())

    def close(self) -> None:
        with self._lock:
            if not self._fh.closed:
                self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_sorted(path: str | Path, records: Iterable[EvaluationRecord]) -> None:
    """Atomically replace ``path`` with ``records`` in (sample_id, model_name) order."""
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        for record in sorted(records, key=lambda r: r.sort_key):
            fh.write(record.to_json() + "\n")
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)
