import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import random_report
from malnarrate.report import (
    ApiCall,
    Endpoint,
    MalformedReport,
    ProcessActivity,
    SandboxReport,
    TriggeredSignature,
    load_report,
    parse_report,
    to_normalized,
)


def test_minimal_document():
    report = parse_report('{"info":{"duration":62},"behavior":{"processes":[]}}')
    assert report.processes == ()
    assert report.analysis_meta["duration"] == 62
    assert report.signatures == ()
    assert report.network.is_empty
    assert report.sample_id


def test_call_order_preserved():
    doc = {"behavior": {"processes": [{"process_id": 7, "process_name": "a.exe", "calls": [
        {"api": "open", "category": "file", "arguments": {}},
        {"api": "write", "category": "file", "arguments": {}},
    ]}]}}
    report = parse_report(doc)
    assert [c.api_name for c in report.processes[0].api_calls] == ["open", "write"]


def test_signature_fixture_field_by_field(tmp_path):
    doc = {"signatures": [{"name": "persistence_autorun", "severity": 3,
                           "description": "Installs itself for autorun at Windows startup",
                           "marks": [{"type": "ioc", "ioc": "HKCU\\Run\\x"},
                                     {"type": "call", "call": {"api": "RegSetValueExA"}}]}]}
    path = tmp_path / "s.json"
    path.write_text(json.dumps(doc))
    report = load_report(path, sample_id="s1")
    assert report.sample_id == "s1"
    assert report.signatures == (
        TriggeredSignature("persistence_autorun", "Installs itself for autorun at Windows startup", 3,
                           ("HKCU\\Run\\x", "RegSetValueExA")),
    )


def test_fixture_reports_parse(report_paths):
    assert len(report_paths) == 5
    for path in report_paths:
        report = load_report(path)
        assert report.sample_id == path.stem
        assert report.signatures
        assert report.processes
        # provenance stays out of the behavioral model
        assert "duration" in report.analysis_meta
        assert "debug" in report.analysis_meta["extra"]


def test_ransomware_fixture_details(ransomware_doc):
    report = parse_report(ransomware_doc)
    payload, vss = report.processes
    assert payload.pid == 900 and payload.parent_pid is None  # 500 was never monitored
    assert report.analysis_meta["dangling_parents"] == {"900": 500}
    assert vss.parent_pid == 900
    assert len(payload.api_calls) == 32
    assert payload.api_calls[0].api_name == "FindFirstFileExW"
    assert report.dropped_files[0].path.endswith("README_RESTORE.txt")
    assert report.dropped_files[0].provenance["size"] == 1432


def test_network_deduplicated(report_paths):
    keylogger = next(p for p in report_paths if p.stem.startswith("0f9e"))
    net = load_report(keylogger).network
    assert net.dns_queries == ("smtp.mail-relay.example.org",)
    # two identical tcp entries plus a bare host entry collapse to one endpoint
    assert net.contacted_ips == (Endpoint("203.0.113.9", 587),)


def test_argument_values_stringified():
    doc = {"behavior": {"processes": [{"process_id": 1, "calls": [
        {"api": "X", "arguments": {"n": 5, "flag": True, "blob": {"b": 1, "a": 2}, "none": None}},
    ]}]}}
    args = parse_report(doc).processes[0].api_calls[0].arguments
    assert args == {"n": "5", "flag": "true", "blob": '{"a": 2, "b": 1}', "none": "null"}


def test_legacy_argument_list():
    doc = {"behavior": {"processes": [{"process_id": 1, "calls": [
        {"api": "X", "arguments": [{"name": "FileName", "value": "a.txt"}]},
    ]}]}}
    assert parse_report(doc).processes[0].api_calls[0].arguments == {"FileName": "a.txt"}


@pytest.mark.parametrize("raw", [b"", b"not json", b"[1, 2]", b"42", b'{"foo": 1}', b"\xff\xfe\x00"])
def test_malformed_inputs(raw):
    with pytest.raises(MalformedReport):
        parse_report(raw)


@given(st.binary(max_size=200))
@settings(max_examples=300)
def test_arbitrary_bytes_never_crash(raw):
    try:
        parse_report(raw)
    except MalformedReport:
        pass


@given(st.recursive(st.none() | st.booleans() | st.integers() | st.text(max_size=5),
                    lambda c: st.lists(c, max_size=3) | st.dictionaries(
                        st.sampled_from(["info", "behavior", "processes", "calls", "signatures", "network",
                                         "dns", "tcp", "dropped", "name", "api", "process_id"]), c, max_size=4),
                    max_leaves=20))
@settings(max_examples=300)
def test_arbitrary_json_shapes_never_crash(value):
    try:
        parse_report(json.dumps(value))
    except MalformedReport:
        pass


def test_round_trip_fixtures(report_paths):
    for path in report_paths:
        report = load_report(path)
        again = parse_report(json.dumps(to_normalized(report)))
        assert again == report


def test_round_trip_random_reports():
    rng = random.Random(7)
    for _ in range(100):
        doc, _ = random_report(rng)
        report = parse_report(doc)
        assert parse_report(to_normalized(report)) == report


def test_invariants_enforced():
    with pytest.raises(ValueError):
        SandboxReport(sample_id="")
    with pytest.raises(ValueError):
        SandboxReport("x", processes=(ProcessActivity(2, "b", parent_pid=1),))
    with pytest.raises(ValueError):
        ApiCall("")
    with pytest.raises(ValueError):
        TriggeredSignature("")
    with pytest.raises(ValueError):
        ProcessActivity(-1, "x")
