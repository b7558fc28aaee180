"""End-to-end acceptance checks, one test per criterion.

Each test carries a ``criterion`` marker; the terminal summary prints one
PASS/FAIL/SKIP line per criterion.
"""

import dataclasses
import json
import os
import random
import re
import socket
import time
from pathlib import Path

import pytest

from helpers import HAND_PAIRS, brute_force_lcs, random_report, random_text
from malnarrate.batch import RECORDS_FILE, TABLE_FILE, run_batch
from malnarrate.cli import main
from malnarrate.config import load_config
from malnarrate.distill import DistillationConfig, distill
from malnarrate.gateway import Gateway, MockBackend, ModelProfile
from malnarrate.metrics import (
    COLUMNS,
    MetricVector,
    evaluate_texts,
    flesch_from_counts,
    flesch_reading_ease,
    lcs_length,
    rouge_l,
    rouge_n,
    text_counts,
)
from malnarrate.records import load_ground_truth, read_records
from malnarrate.report import load_report, parse_report
from malnarrate.summarizer import DEFAULT_SECTIONS, default_template, summarize
from malnarrate.table import HEADERS

LEXICAL_TOL = 1e-9
EMBEDDING_TOL = 1e-6
PAIRWISE_LEXICAL = ("rouge1_f", "rouge2_f", "rougeL_f")
PAIRWISE_EMBEDDING = ("bertscore_p", "bertscore_r", "bertscore_f1", "semantic_similarity", "keyphrase_match")


@pytest.mark.criterion(1, "metric oracle suite")
def test_metric_oracles():
    started = time.perf_counter()
    assert len(HAND_PAIRS) >= 10
    for cand, ref, r1, r2, rl in HAND_PAIRS:
        assert abs(rouge_n(cand, ref, 1) - float(r1)) <= LEXICAL_TOL, (cand, ref)
        assert abs(rouge_n(cand, ref, 2) - float(r2)) <= LEXICAL_TOL, (cand, ref)
        assert abs(rouge_l(cand, ref) - float(rl)) <= LEXICAL_TOL, (cand, ref)

    rng = random.Random(1)
    for _ in range(200):
        a = [rng.randrange(4) for _ in range(rng.randint(0, 12))]
        b = [rng.randrange(4) for _ in range(rng.randint(0, 12))]
        assert lcs_length(a, b) == brute_force_lcs(a, b), (a, b)
    elapsed = time.perf_counter() - started
    assert elapsed < 5.0, f"took {elapsed:.2f}s"


@pytest.mark.criterion(2, "range and identity properties over 1000 random pairs")
def test_range_and_identity(mock_embedder):
    started = time.perf_counter()
    rng = random.Random(2)
    for _ in range(1000):
        generated = random_text(rng, 0, 60)
        reference = random_text(rng, 1, 60)
        vec, _ = evaluate_texts(generated, reference, mock_embedder)
        # construction re-checks every field range
        MetricVector(**vec.to_dict())
        assert 0.0 <= vec.readability <= 100.0

    for _ in range(100):
        text = random_text(rng, 2, 60)
        vec, _ = evaluate_texts(text, text, mock_embedder)
        for name in PAIRWISE_LEXICAL:
            assert abs(getattr(vec, name) - 1.0) <= LEXICAL_TOL, (name, text)
        for name in PAIRWISE_EMBEDDING:
            assert abs(getattr(vec, name) - 1.0) <= EMBEDDING_TOL, (name, text)
    elapsed = time.perf_counter() - started
    assert elapsed < 30.0, f"took {elapsed:.2f}s"


# (text, words, sentences, syllables); syllables counted per word by the vowel-group rule
READABILITY_FIXTURES = [
    ("The cat sat.", 3, 1, 3),                                     # 119.19, clamped high
    ("Cat sat. Dog ran.", 4, 2, 4),
    ("Persistence registry executable behavior", 4, 1, 13),        # 3+3+4+3, clamped low
    ("The malware deletes files. It scans the network.", 8, 2, 13),
    ("Malware encrypted the registry.", 4, 1, 9),                   # 2+3+1+3
    ("The process agrees.", 3, 1, 5),                               # 1+2+2
    ("It ran. It sat. It hid.", 6, 3, 6),
    ("Network payload system queue.", 4, 1, 7),                     # 2+2+2+1
    ("Those files agree!", 3, 1, 5),                                # 1+2+2
    ("Is it the code? It is.", 6, 2, 6),
    ("Rhythm.", 1, 1, 1),
    ("the cat sat on the mat", 6, 1, 6),                            # no terminal punctuation
    (" ".join(["cat"] * 30) + ".", 30, 1, 30),
    (" ".join(["dog"] * 60) + ".", 60, 1, 60),
    (" ".join(["dog"] * 150) + ".", 150, 1, 150),                   # long run-on, clamped low
    ("Executable executable.", 2, 1, 8),
    ("Behavior behavior. Cat.", 3, 2, 7),
    ("API calls, network calls.", 4, 1, 6),                         # 2+1+2+1
    ("It used port 443.", 4, 1, 5),                                 # 1+2+1+1
    ("Encrypted. Encrypted. Encrypted.", 3, 3, 9),
]


@pytest.mark.criterion(3, "readability matches direct formula evaluation")
def test_readability_fixtures():
    assert len(READABILITY_FIXTURES) == 20
    clamped = {"high": 0, "low": 0}
    for text, words, sentences, syllables in READABILITY_FIXTURES:
        assert text_counts(text) == (words, sentences, syllables), text
        raw = 206.835 - 1.015 * (words / sentences) - 84.6 * (syllables / words)
        expected = min(100.0, max(0.0, raw))
        clamped["high"] += raw > 100
        clamped["low"] += raw < 0
        assert abs(flesch_reading_ease(text) - expected) <= LEXICAL_TOL, text
    assert clamped["high"] and clamped["low"]
    assert abs(flesch_from_counts(10, 2, 14) - 83.32) <= LEXICAL_TOL


@pytest.mark.criterion(4, "distillation removes planted provenance and respects the budget")
def test_distillation_guarantee():
    rng = random.Random(4)
    checked = 0
    for _ in range(500):
        doc, planted = random_report(rng)
        assert planted
        budget = rng.randint(64, 3000)
        out = distill(parse_report(doc), DistillationConfig(token_budget=budget))
        text = out.render()
        assert out.estimated_tokens <= budget
        leaked = [p for p in planted if p in text]
        assert not leaked, leaked
        checked += len(planted)
    assert checked >= 500


@pytest.fixture
def no_network(monkeypatch):
    def refuse(*args, **kwargs):
        raise OSError("network access attempted during an offline run")

    monkeypatch.setattr(socket.socket, "connect", refuse)
    monkeypatch.setattr(socket, "getaddrinfo", refuse)
    monkeypatch.setattr(socket, "create_connection", refuse)


def _without_timestamps(path: Path) -> list[str]:
    # latency_ms is wall-clock time measured like the timestamp
    lines = []
    for line in path.read_text(encoding="utf-8").splitlines():
        obj = json.loads(line)
        obj["run_meta"].pop("timestamp")
        obj["run_meta"].pop("latency_ms")
        lines.append(json.dumps(obj, sort_keys=True))
    return lines


@pytest.mark.criterion(5, "end-to-end offline run over 5 reports x 2 models")
def test_end_to_end_offline(fixtures_dir, tmp_path, no_network):
    started = time.perf_counter()
    base = load_config(fixtures_dir / "run.toml")
    truth = load_ground_truth(fixtures_dir / "ground_truth.jsonl")
    assert len(truth) == 5 and len(base.profiles) == 2

    runs = []
    for name in ("first", "second"):
        cfg = dataclasses.replace(base, output_dir=tmp_path / name)
        records = run_batch(cfg, fixtures_dir / "reports", truth, backend=MockBackend())
        assert len(records) == 10
        assert all(r.ok for r in records)
        for r in records:
            assert set(r.metrics.to_dict()) == {name for _, name in COLUMNS}
        runs.append(cfg.output_dir)

    first = (runs[0] / RECORDS_FILE).read_bytes()
    second = (runs[1] / RECORDS_FILE).read_bytes()
    assert read_records(runs[0] / RECORDS_FILE) != []
    assert _without_timestamps(runs[0] / RECORDS_FILE) == _without_timestamps(runs[1] / RECORDS_FILE)
    stamp = re.compile(rb'"(?:latency_ms|timestamp)": (?:"[^"]*"|\d+)')
    assert stamp.sub(b"", first) == stamp.sub(b"", second)

    table = (runs[0] / TABLE_FILE).read_text(encoding="utf-8")
    assert (runs[1] / TABLE_FILE).read_text(encoding="utf-8") == table
    header = [c.strip() for c in table.splitlines()[0].strip("|").split("|")]
    assert header == ["Model", *HEADERS]
    assert " ".join(HEADERS) == "R-1 R-2 R-L BS-P BS-R BS-F1 SS FKR D-1 D-2 KM"
    rows = table.splitlines()[2:]
    assert len(rows) == 2
    for row in rows:
        cells = [c.strip().strip("*") for c in row.strip("|").split("|")][1:]
        assert len(cells) == 11
        assert all(re.fullmatch(r"\d+\.\d{4}", c) for c in cells), cells
    elapsed = time.perf_counter() - started
    assert elapsed < 10.0, f"took {elapsed:.2f}s"


@pytest.mark.criterion(6, "failure containment under exhausted retries")
def test_failure_containment(fixtures_dir, tmp_path, no_network):
    target_model = "mock-mistral-7b-instruct"

    def exhaust(body):
        # the ransomware fixture is the only report invoking vssadmin
        if body["model"] == target_model and "vssadmin" in body["messages"][1]["content"]:
            return 503
        return None

    backend = MockBackend(fail_when=exhaust)
    out_dir = tmp_path / "out"
    code = main([
        "batch", "--config", str(fixtures_dir / "run.toml"),
        "--reports-dir", str(fixtures_dir / "reports"),
        "--ground-truth", str(fixtures_dir / "ground_truth.jsonl"),
        "--output-dir", str(out_dir),
    ], backend=backend)
    assert code == 1
    records = read_records(out_dir / RECORDS_FILE)
    n = 10
    assert len(records) == n
    ok = [r for r in records if r.ok]
    failed = [r for r in records if not r.ok]
    assert len(ok) == n - 1
    assert len(failed) == 1 and failed[0].model_name == target_model
    assert failed[0].error["type"] == "RetriesExhausted"
    # three attempts hit the endpoint for the failing pair
    hits = [r for r in backend.requests_to("/v1/chat/completions")
            if r.body["model"] == target_model and "vssadmin" in r.body["messages"][1]["content"]]
    assert len(hits) == 3
    assert (out_dir / TABLE_FILE).exists()


LIVE_ENDPOINT = os.environ.get("MALNARRATE_LIVE_ENDPOINT")
LIVE_MODEL = os.environ.get("MALNARRATE_LIVE_MODEL")


@pytest.mark.live
@pytest.mark.criterion(7, "live endpoint smoke (environment-gated)")
@pytest.mark.skipif(not (LIVE_ENDPOINT and LIVE_MODEL),
                    reason="set MALNARRATE_LIVE_ENDPOINT and MALNARRATE_LIVE_MODEL to run")
def test_live_smoke(report_paths):
    profile = ModelProfile(LIVE_MODEL, LIVE_ENDPOINT, max_output_tokens=768, temperature=0.2)
    report = load_report(report_paths[0])
    with Gateway(timeout=180.0) as gw:
        summary = summarize(report, DistillationConfig(), default_template(), profile, gw)
    assert tuple(h for h, _ in summary.sections) == DEFAULT_SECTIONS
    assert all(p.strip() for _, p in summary.sections)
