from __future__ import annotations

import socket
import sys
from collections import defaultdict
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

CRITERIA = {
    1: "payoff-table oracle",
    2: "public good conservation",
    3: "outcome brute force",
    4: "credit identities",
    5: "metric formula fidelity",
    6: "nash-pressure scripted tournament",
    7: "determinism and hermeticity",
    8: "PGM event discipline",
    9: "report round-trip and counter merge",
    10: "live smoke (env-gated)",
}

_results: dict[int, list[str]] = defaultdict(list)


def pytest_configure(config: pytest.Config) -> None:
    config.addinivalue_line("markers", "criterion(n): acceptance criterion this test checks")


class NetworkDisabled(RuntimeError):
    pass


def disable_network(monkeypatch: pytest.MonkeyPatch) -> None:
    """Make any attempt to open a socket fail loudly."""

    def refuse(*args, **kwargs):
        raise NetworkDisabled("network access attempted in a hermetic test")

    monkeypatch.setattr(socket.socket, "connect", refuse)
    monkeypatch.setattr(socket.socket, "connect_ex", refuse)
    monkeypatch.setattr(socket, "create_connection", refuse)
    monkeypatch.setattr(socket, "getaddrinfo", refuse)


@pytest.fixture
def no_network(monkeypatch: pytest.MonkeyPatch) -> None:
    disable_network(monkeypatch)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item: pytest.Item, call: pytest.CallInfo):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    n = marker.args[0]
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _results[n].append("skipped" if report.skipped else "passed" if report.passed else "failed")


def pytest_terminal_summary(terminalreporter, exitstatus, config) -> None:
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for n, name in CRITERIA.items():
        states = _results.get(n)
        if not states:
            line = "NOT RUN"
        elif "failed" in states:
            line = "FAIL"
        elif all(s == "skipped" for s in states):
            line = "SKIP"
        else:
            line = "PASS"
        terminalreporter.write_line(f"criterion {n:2d} [{name}]: {line}")
