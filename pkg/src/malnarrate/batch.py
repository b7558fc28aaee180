"""Batch driver: every (sample, model) pair is summarized, scored and persisted."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

from . import __version__
from .config import GatewaySettings, RunConfig
from .gateway import EmbeddingProvider, Gateway, MockBackend, ModelProfile, RetriesExhausted
from .metrics import evaluate_texts
from .records import EvaluationRecord, GroundTruthEntry, RecordWriter, write_sorted
from .report import SandboxReport, load_report
from .summarizer import summarize_run
from .table import render_table

logger = logging.getLogger(__name__)

RECORDS_FILE = "records.jsonl"
TABLE_FILE = "table.md"


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def make_gateway(gw: GatewaySettings, backend: MockBackend | None = None) -> Gateway:
    return Gateway(
        timeout=gw.timeout_s,
        retry=gw.retry_policy(),
        max_in_flight=gw.max_in_flight,
        embed_batch_size=gw.embed_batch_size,
        transport=backend.transport() if backend is not None else None,
    )


def _base_meta(cfg: RunConfig, profile: ModelProfile) -> dict:
    return {
        "config_digest": cfg.digest(),
        "tool_version": __version__,
        "quantization_hint": profile.quantization_hint,
        "timestamp": _now(),
    }


def _evaluate_one(
    cfg: RunConfig,
    gateway: Gateway,
    embedder: EmbeddingProvider,
    entry: GroundTruthEntry,
    report: SandboxReport | Exception,
    profile: ModelProfile,
) -> EvaluationRecord:
    meta = _base_meta(cfg, profile)
    try:
        if isinstance(report, Exception):
            raise report
        summary, exchange = summarize_run(report, cfg.distillation, cfg.template, profile, gateway)
        usage = list(exchange.usage_tokens) if exchange.usage_tokens else None
        meta.update(latency_ms=exchange.latency_ms, attempts=exchange.attempts, usage_tokens=usage)
        metrics, flags = evaluate_texts(summary.text, entry.reference_text, embedder, cfg.keyphrase_k)
        if flags:
            meta["metric_flags"] = flags
        return EvaluationRecord(entry.sample_id, profile.model_name, summary, metrics, meta)
    except Exception as exc:  # noqa: BLE001 - one bad pair must not abort the batch
        if isinstance(exc, RetriesExhausted):
            meta["attempts"] = exc.attempts
        logger.error("%s / %s failed: %s: %s", entry.sample_id, profile.model_name, type(exc).__name__, exc)
        return EvaluationRecord(
            entry.sample_id, profile.model_name, None, None, meta,
            error={"type": type(exc).__name__, "message": str(exc)},
        )


def run_batch(
    cfg: RunConfig,
    reports_dir: str | Path,
    ground_truth: Sequence[GroundTruthEntry],
    *,
    backend: MockBackend | None = None,
    gateway: Gateway | None = None,
    models: Iterable[str] | None = None,
) -> list[EvaluationRecord]:
    """Run the full pipeline and write ``records.jsonl`` and ``table.md`` under ``cfg.output_dir``.

    Records are appended as they finish (so a crash keeps completed work), then
    the file is rewritten sorted by (sample_id, model_name). Samples with no
    ``{sample_id}.json`` report are skipped with a warning.
    """
    reports_dir = Path(reports_dir)
    profiles = list(cfg.profiles)
    if models:
        wanted = set(models)
        profiles = [p for p in profiles if p.model_name in wanted]
        if not profiles:
            raise ValueError(f"no configured profile matches {sorted(wanted)}")

    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records_path = out_dir / RECORDS_FILE

    tasks = []
    for entry in ground_truth:
        path = reports_dir / f"{entry.sample_id}.json"
        if not path.is_file():
            logger.warning("no report for sample %s at %s; skipping", entry.sample_id, path)
            continue
        try:
            report: SandboxReport | Exception = load_report(path, sample_id=entry.sample_id)
        except Exception as exc:  # noqa: BLE001
            report = exc
        for profile in profiles:
            tasks.append((entry, report, profile))

    own_gateway = gateway is None
    gateway = gateway or make_gateway(cfg.gateway, backend)
    embedder = EmbeddingProvider(gateway, cfg.embedder_profile)
    records: list[EvaluationRecord] = []
    try:
        with RecordWriter(records_path) as writer, ThreadPoolExecutor(max_workers=cfg.parallelism) as pool:
            def work(task):
                record = _evaluate_one(cfg, gateway, embedder, *task)
                writer.append(record)
                return record

            records = list(pool.map(work, tasks))
    finally:
        if own_gateway:
            gateway.close()

    records.sort(key=lambda r: r.sort_key)
    write_sorted(records_path, records)
    if any(r.ok for r in records):
        (out_dir / TABLE_FILE).write_text(render_table(records), encoding="utf-8")
    return records
