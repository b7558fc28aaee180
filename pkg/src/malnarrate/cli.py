"""Command-line entry point: ``malnarrate <subcommand>``.

Exit status: 0 success, 1 partial failure, 2 fatal or configuration error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

from .batch import TABLE_FILE, make_gateway, run_batch
from .config import ConfigError, GatewaySettings, load_config
from .distill import DistillationConfig
from .gateway import EmbeddingProvider, GatewayError, MockBackend, ModelProfile
from .metrics import evaluate_texts
from .records import DuplicateSample, MalformedLine, load_ground_truth
from .report import MalformedReport, load_report
from .summarizer import EmptyCompletion, default_template, default_template_text, summarize
from .table import render_table

EXIT_OK, EXIT_PARTIAL, EXIT_FATAL = 0, 1, 2
OFFLINE_ENDPOINT = "http://offline.invalid"

log = logging.getLogger("malnarrate")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="malnarrate", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("summarize", help="summarize one sandbox report to stdout")
    p.add_argument("report", type=Path)
    p.add_argument("--config", type=Path)
    p.add_argument("--model", help="profile name from the config (default: first)")
    p.add_argument("--endpoint-url", help="endpoint to use when no config is given")
    p.add_argument("--offline", action="store_true", help="use the built-in mock model")

    p = sub.add_parser("evaluate", help="score a generated summary against a reference")
    p.add_argument("--generated", type=Path, required=True)
    p.add_argument("--reference", type=Path, required=True)
    p.add_argument("--config", type=Path, help="take the embedder endpoint from this config")
    p.add_argument("--offline", action="store_true", help="use deterministic mock embeddings")
    p.add_argument("--keyphrase-k", type=int, default=None)

    p = sub.add_parser("batch", help="run every ground-truth sample through every model")
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--reports-dir", type=Path, required=True)
    p.add_argument("--ground-truth", type=Path, required=True)
    p.add_argument("--output-dir", type=Path)
    p.add_argument("--parallelism", type=int)
    p.add_argument("--model", action="append", help="restrict to this model (repeatable)")
    p.add_argument("--offline", action="store_true", help="force mock providers")

    sub.add_parser("print-template", help="print the default prompt template (TOML)")

    p = sub.add_parser("validate-config", help="parse and check a run config")
    p.add_argument("config_path", nargs="?", type=Path)
    p.add_argument("--config", type=Path)
    return parser


def _cmd_summarize(args, backend: MockBackend | None) -> int:
    if args.offline and backend is None:
        backend = MockBackend()
    if args.config:
        cfg = load_config(args.config)
        profiles = {p.model_name: p for p in cfg.profiles}
        if args.model and args.model not in profiles:
            raise ConfigError(f"--model: no profile named {args.model!r}")
        profile = profiles[args.model] if args.model else cfg.profiles[0]
        distillation, template, gateway = cfg.distillation, cfg.template, make_gateway(cfg.gateway, backend)
    else:
        endpoint = args.endpoint_url or (OFFLINE_ENDPOINT if backend else None)
        if not endpoint:
            raise ConfigError("--endpoint-url (or --config / --offline) is required")
        profile = ModelProfile(args.model or "mock-model", endpoint)
        distillation, template = DistillationConfig(), default_template()
        gateway = make_gateway(GatewaySettings(), backend)

    report = load_report(args.report)
    with gateway:
        summary = summarize(report, distillation, template, profile, gateway)
    print(summary.render())
    return EXIT_OK


def _cmd_evaluate(args, backend: MockBackend | None) -> int:
    generated = args.generated.read_text(encoding="utf-8")
    reference = args.reference.read_text(encoding="utf-8")
    k = args.keyphrase_k
    if args.config and not args.offline:
        cfg = load_config(args.config)
        gateway, profile = make_gateway(cfg.gateway, backend), cfg.embedder_profile
        k = k or cfg.keyphrase_k
    else:
        if not args.offline:
            log.info("no --config given; using deterministic offline embeddings")
        gateway = make_gateway(GatewaySettings(), backend or MockBackend())
        profile = ModelProfile("mock-embedder", OFFLINE_ENDPOINT)
    if k is not None and k < 1:
        raise ConfigError("--keyphrase-k: must be >= 1")
    with gateway:
        metrics, flags = evaluate_texts(generated, reference, EmbeddingProvider(gateway, profile), k or 10)
    for name, flag in flags.items():
        log.warning("%s: %s", name, flag)
    print(json.dumps(metrics.to_dict(), indent=2))
    return EXIT_OK


def _cmd_batch(args, backend: MockBackend | None) -> int:
    cfg = load_config(args.config)
    changes = {}
    if args.output_dir is not None:
        changes["output_dir"] = args.output_dir
    if args.parallelism is not None:
        changes["parallelism"] = args.parallelism
    if changes:
        cfg = dataclasses.replace(cfg, **changes)
    if args.offline and backend is None:
        backend = MockBackend()
    ground_truth = load_ground_truth(args.ground_truth)
    try:
        Path(cfg.output_dir).mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"output_dir: cannot create {cfg.output_dir}: {exc}") from None
    records = run_batch(cfg, args.reports_dir, ground_truth, backend=backend, models=args.model)
    failed = [r for r in records if not r.ok]
    if any(r.ok for r in records):
        print(render_table(records, markdown=False), end="")
        log.info("wrote %s", Path(cfg.output_dir) / TABLE_FILE)
    print(f"{len(records) - len(failed)} ok, {len(failed)} failed", file=sys.stderr)
    return EXIT_PARTIAL if failed else EXIT_OK


def _cmd_validate(args, backend) -> int:
    path = args.config or args.config_path
    if path is None:
        raise ConfigError("config: a path is required")
    cfg = load_config(path)
    print(f"ok: {len(cfg.profiles)} profile(s), digest {cfg.digest()[:16]}")
    return EXIT_OK


def _cmd_print_template(args, backend) -> int:
    print(default_template_text(), end="")
    return EXIT_OK


COMMANDS = {
    "summarize": _cmd_summarize,
    "evaluate": _cmd_evaluate,
    "batch": _cmd_batch,
    "print-template": _cmd_print_template,
    "validate-config": _cmd_validate,
}


def main(argv: Sequence[str] | None = None, *, backend: MockBackend | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"malnarrate: error: {exc}", file=sys.stderr)
        return EXIT_FATAL
    except SystemExit as exc:  # --help
        return int(exc.code or 0)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    logging.getLogger("httpx").setLevel(logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return COMMANDS[args.command](args, backend)
    except (ConfigError, DuplicateSample, MalformedLine, OSError) as exc:
        print(f"malnarrate: error: {exc}", file=sys.stderr)
        return EXIT_FATAL
    except (MalformedReport, EmptyCompletion, GatewayError, ValueError) as exc:
        print(f"malnarrate: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PARTIAL


if __name__ == "__main__":
    sys.exit(main())
