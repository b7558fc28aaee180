"""Cuckoo 2.x JSON report model and parser.

Only the behavioral sections (signatures, processes and their API calls,
network, dropped files) are modeled as typed data. Everything else in the
report (analysis info, target hashes, unrecognized top-level keys) is kept as
provenance and never reaches the distiller.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Mapping

RECOGNIZED_SECTIONS = ("info", "target", "signatures", "behavior", "network", "dropped")

# Keys we accept at top level without treating them as provenance. ``sample_id``
# is our own extension, emitted by ``to_normalized`` so round trips keep identity.
_KNOWN_KEYS = frozenset(RECOGNIZED_SECTIONS) | {"sample_id"}


class MalformedReport(ValueError):
    """The input is not a usable sandbox report."""


@dataclass(frozen=True)
class TriggeredSignature:
    name: str
    description: str = ""
    severity: int = 0
    marks: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("signature name must be non-empty")
        if self.severity < 0:
            raise ValueError("signature severity must be >= 0")


@dataclass(frozen=True)
class ApiCall:
    api_name: str
    category: str = ""
    arguments: Mapping[str, str] = field(default_factory=dict)
    status: bool = True

    def __post_init__(self) -> None:
        if not self.api_name:
            raise ValueError("api_name must be non-empty")


@dataclass(frozen=True)
class ProcessActivity:
    pid: int
    process_name: str
    parent_pid: int | None = None
    api_calls: tuple[ApiCall, ...] = ()
    command_line: str | None = None

    def __post_init__(self) -> None:
        if self.pid < 0:
            raise ValueError("pid must be >= 0")


@dataclass(frozen=True)
class HttpRequest:
    method: str
    host: str
    path: str


@dataclass(frozen=True)
class Endpoint:
    address: str
    port: int | None = None


@dataclass(frozen=True)
class NetworkActivity:
    dns_queries: tuple[str, ...] = ()
    http_requests: tuple[HttpRequest, ...] = ()
    contacted_ips: tuple[Endpoint, ...] = ()

    @property
    def is_empty(self) -> bool:
        return not (self.dns_queries or self.http_requests or self.contacted_ips)


@dataclass(frozen=True)
class DroppedFile:
    path: str
    file_type: str = ""
    # size and hashes live here; the distiller never renders them
    provenance: Mapping[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class SandboxReport:
    sample_id: str
    target_meta: Mapping[str, Any] = field(default_factory=dict)
    signatures: tuple[TriggeredSignature, ...] = ()
    processes: tuple[ProcessActivity, ...] = ()
    network: NetworkActivity = field(default_factory=NetworkActivity)
    dropped_files: tuple[DroppedFile, ...] = ()
    analysis_meta: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.sample_id:
            raise ValueError("sample_id must be non-empty")
        pids = {p.pid for p in self.processes}
        for proc in self.processes:
            if proc.parent_pid is not None and proc.parent_pid not in pids:
                raise ValueError(f"process {proc.pid} references unknown parent {proc.parent_pid}")


def _stringify(value: Any) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)) or value is None:
        return json.dumps(value)
    return json.dumps(value, sort_keys=True, ensure_ascii=False)


def _as_int(value: Any, default: int | None = None) -> int | None:
    if isinstance(value, bool):
        return int(value)
    if isinstance(value, int):
        return value
    if isinstance(value, str):
        try:
            return int(value, 0)
        except ValueError:
            return default
    if isinstance(value, float) and value.is_integer():
        return int(value)
    return default


def _list(value: Any) -> list:
    return value if isinstance(value, list) else []


def _dict(value: Any) -> dict:
    return value if isinstance(value, dict) else {}


def _dedup(items):
    seen = set()
    out = []
    for item in items:
        if item not in seen:
            seen.add(item)
            out.append(item)
    return tuple(out)


def _mark_text(mark: Any) -> str:
    if not isinstance(mark, dict):
        return _stringify(mark)
    kind = mark.get("type")
    if kind == "ioc" and "ioc" in mark:
        return _stringify(mark["ioc"])
    if kind == "call" and isinstance(mark.get("call"), dict):
        return _stringify(mark["call"].get("api", ""))
    return _stringify(mark)


def _parse_signature(raw: Any) -> TriggeredSignature | None:
    if isinstance(raw, str):
        raw = {"name": raw}
    raw = _dict(raw)
    name = _stringify(raw.get("name") or "")
    if not name:
        return None
    severity = _as_int(raw.get("severity"), 0) or 0
    marks = tuple(m for m in (_mark_text(m) for m in _list(raw.get("marks"))) if m)
    return TriggeredSignature(
        name=name,
        description=_stringify(raw.get("description") or ""),
        severity=max(severity, 0),
        marks=marks,
    )


def _parse_arguments(raw: Any) -> dict[str, str]:
    # Cuckoo 1.x used a list of {name, value}; 2.x uses a flat mapping.
    if isinstance(raw, list):
        return {
            _stringify(a.get("name", "")): _stringify(a.get("value"))
            for a in raw
            if isinstance(a, dict) and a.get("name")
        }
    return {str(k): _stringify(v) for k, v in _dict(raw).items()}


def _parse_call(raw: Any) -> ApiCall | None:
    raw = _dict(raw)
    name = raw.get("api") or raw.get("api_name")
    if not name:
        return None
    status = raw.get("status", True)
    if isinstance(status, str):
        status = status.lower() in ("1", "true", "success")
    return ApiCall(
        api_name=str(name),
        category=_stringify(raw.get("category") or ""),
        arguments=_parse_arguments(raw.get("arguments")),
        status=bool(status),
    )


def _parse_processes(behavior: dict) -> tuple[tuple[ProcessActivity, ...], dict[str, int]]:
    staged = []
    for raw in _list(behavior.get("processes")):
        raw = _dict(raw)
        pid = _as_int(raw.get("process_id", raw.get("pid")))
        if pid is None or pid < 0:
            continue
        ppid = _as_int(raw.get("parent_id", raw.get("ppid")))
        calls = tuple(c for c in (_parse_call(c) for c in _list(raw.get("calls"))) if c)
        cmd = raw.get("command_line")
        staged.append((pid, _stringify(raw.get("process_name") or ""), ppid, calls,
                       None if cmd is None else _stringify(cmd)))

    known = {s[0] for s in staged}
    dangling: dict[str, int] = {}
    processes = []
    for pid, name, ppid, calls, cmd in staged:
        if ppid is not None and ppid not in known:
            # parent was not monitored (e.g. explorer.exe); keep the link as provenance only
            dangling[str(pid)] = ppid
            ppid = None
        processes.append(ProcessActivity(pid, name, ppid, calls, cmd))
    return tuple(processes), dangling


def _parse_network(raw: dict) -> NetworkActivity:
    dns = []
    for entry in _list(raw.get("dns")):
        name = entry.get("request") if isinstance(entry, dict) else entry
        if name:
            dns.append(_stringify(name))

    http = []
    for entry in _list(raw.get("http")) + _list(raw.get("http_ex")) + _list(raw.get("https_ex")):
        if not isinstance(entry, dict):
            continue
        host = entry.get("host") or entry.get("dst") or ""
        path = entry.get("path") or entry.get("uri") or "/"
        http.append(HttpRequest(_stringify(entry.get("method") or "GET"), _stringify(host), _stringify(path)))

    ips = []
    for proto in ("tcp", "udp"):
        for entry in _list(raw.get(proto)):
            if isinstance(entry, dict) and entry.get("dst"):
                ips.append(Endpoint(_stringify(entry["dst"]), _as_int(entry.get("dport"))))
    for entry in _list(raw.get("hosts")):
        addr = entry.get("ip") if isinstance(entry, dict) else entry
        if addr:
            ips.append(Endpoint(_stringify(addr), None))
    # a bare host entry adds nothing when the address already has a port-qualified entry
    with_port = {e.address for e in ips if e.port is not None}
    ips = [e for e in ips if e.port is not None or e.address not in with_port]

    return NetworkActivity(_dedup(dns), _dedup(http), _dedup(ips))


def _parse_dropped(raw: Any) -> DroppedFile | None:
    raw = _dict(raw)
    path = raw.get("filepath") or raw.get("path") or raw.get("name")
    if not path:
        return None
    provenance = {k: v for k, v in raw.items() if k not in ("filepath", "path", "type")}
    return DroppedFile(_stringify(path), _stringify(raw.get("type") or ""), provenance)


def _fallback_id(doc: dict) -> str:
    canonical = json.dumps(doc, sort_keys=True, ensure_ascii=False).encode("utf-8")
    return hashlib.sha256(canonical).hexdigest()


def parse_report(raw: str | bytes | Mapping[str, Any], sample_id: str | None = None) -> SandboxReport:
    """Parse a Cuckoo JSON report into a :class:`SandboxReport`.

    ``raw`` may be the JSON text/bytes or an already-decoded mapping. Missing
    optional sections produce empty collections. ``sample_id`` overrides any id
    found in the document; otherwise the target's SHA-256 is used, then
    ``info.id``, then a digest of the document itself.
    """
    if isinstance(raw, (str, bytes, bytearray)):
        try:
            doc = json.loads(raw)
        except (ValueError, UnicodeDecodeError) as exc:
            raise MalformedReport(f"not valid JSON: {exc}") from None
    else:
        doc = raw
    if not isinstance(doc, Mapping):
        raise MalformedReport("top-level JSON value must be an object")
    doc = dict(doc)
    if not any(k in doc for k in RECOGNIZED_SECTIONS):
        raise MalformedReport(
            "no recognized report sections (expected one of: " + ", ".join(RECOGNIZED_SECTIONS) + ")"
        )

    info = _dict(doc.get("info"))
    target = _dict(doc.get("target"))
    behavior = _dict(doc.get("behavior"))

    processes, dangling = _parse_processes(behavior)
    analysis_meta: dict[str, Any] = dict(info)
    if dangling:
        analysis_meta["dangling_parents"] = dangling
    extra = {k: v for k, v in doc.items() if k not in _KNOWN_KEYS}
    if extra:
        analysis_meta["extra"] = extra

    sid = sample_id or doc.get("sample_id") or _dict(target.get("file")).get("sha256") or info.get("id")
    sid = _stringify(sid) if sid not in (None, "") else _fallback_id(doc)

    signatures = tuple(s for s in (_parse_signature(s) for s in _list(doc.get("signatures"))) if s)
    dropped = tuple(d for d in (_parse_dropped(d) for d in _list(doc.get("dropped"))) if d)

    return SandboxReport(
        sample_id=sid,
        target_meta=target,
        signatures=signatures,
        processes=processes,
        network=_parse_network(_dict(doc.get("network"))),
        dropped_files=dropped,
        analysis_meta=analysis_meta,
    )


def load_report(path, sample_id: str | None = None) -> SandboxReport:
    with open(path, "rb") as fh:
        data = fh.read()
    return parse_report(data, sample_id=sample_id)


def to_normalized(report: SandboxReport) -> dict[str, Any]:
    """Render a report back into Cuckoo 2.x layout; ``parse_report`` inverts it."""
    info = {k: v for k, v in report.analysis_meta.items() if k != "extra"}
    doc: dict[str, Any] = dict(report.analysis_meta.get("extra", {}))
    doc.update(
        sample_id=report.sample_id,
        info=info,
        target=dict(report.target_meta),
        signatures=[
            {
                "name": s.name,
                "description": s.description,
                "severity": s.severity,
                "marks": [{"type": "ioc", "ioc": m} for m in s.marks],
            }
            for s in report.signatures
        ],
        behavior={
            "processes": [
                {
                    "process_id": p.pid,
                    "process_name": p.process_name,
                    "parent_id": p.parent_pid,
                    "command_line": p.command_line,
                    "calls": [
                        {
                            "api": c.api_name,
                            "category": c.category,
                            "arguments": dict(c.arguments),
                            "status": c.status,
                        }
                        for c in p.api_calls
                    ],
                }
                for p in report.processes
            ]
        },
        network={
            "dns": [{"request": d} for d in report.network.dns_queries],
            "http": [{"method": h.method, "host": h.host, "path": h.path} for h in report.network.http_requests],
            "tcp": [{"dst": e.address, "dport": e.port} for e in report.network.contacted_ips if e.port is not None],
            "hosts": [e.address for e in report.network.contacted_ips if e.port is None],
        },
        dropped=[
            {**dict(d.provenance), "filepath": d.path, "type": d.file_type} for d in report.dropped_files
        ],
    )
    return doc
