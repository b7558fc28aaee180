from __future__ import annotations

import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from malnarrate.gateway import EmbeddingProvider, Gateway, MockBackend, ModelProfile, RetryPolicy  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"
REPORTS = FIXTURES / "reports"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def report_paths() -> list[Path]:
    return sorted(REPORTS.glob("*.json"))


@pytest.fixture
def ransomware_doc() -> dict:
    return json.loads((REPORTS / "a4b5c6d7e8f90123456789abcdef0123456789abcdef0123456789abcdef0123.json").read_text())


@pytest.fixture
def profile() -> ModelProfile:
    return ModelProfile("mock-model", "http://mock.invalid")


def make_gateway(backend: MockBackend, **kwargs) -> Gateway:
    kwargs.setdefault("retry", RetryPolicy(max_attempts=3, backoff_base=0.0, jitter=0.0))
    kwargs.setdefault("sleep", lambda s: None)
    return Gateway(transport=backend.transport(), **kwargs)


@pytest.fixture
def mock_embedder():
    backend = MockBackend()
    gateway = make_gateway(backend)
    yield EmbeddingProvider(gateway, ModelProfile("mock-embedder", "http://mock.invalid"))
    gateway.close()


# acceptance criteria get one PASS/FAIL/SKIP line each at the end of the run
_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    marker = getattr(report, "criterion", None)
    if marker is None:
        return
    number, title = marker
    if report.when == "call" or report.outcome != "passed":
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
        if _CRITERIA.get(number, ("", ""))[0] != "FAIL":
            _CRITERIA[number] = (status, title)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        outcome.get_result().criterion = tuple(marker.args)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        status, title = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number}: {status}  {title}")
