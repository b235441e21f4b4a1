"""Shared fixtures and the acceptance-criteria terminal summary."""
import json
from pathlib import Path

import pytest

import etsim

_ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def record_criterion(name: str, passed: bool, detail: str) -> None:
    """Collect one acceptance-criterion outcome for the end-of-run summary."""
    _ACCEPTANCE_RESULTS.append((name, passed, detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _ACCEPTANCE_RESULTS:
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"[{status}] {name}: {detail}")


@pytest.fixture(scope="session")
def expectations() -> dict:
    path = Path(__file__).parent / "expectations.json"
    return json.loads(path.read_text())


@pytest.fixture(scope="session")
def reference_config() -> etsim.SimConfig:
    return etsim.load_config("paper_sec4.json")


@pytest.fixture(scope="session")
def reference_trace(reference_config) -> etsim.SimTrace:
    """One full run of the bundled four-agent scenario (seed 0)."""
    return etsim.run_simulation(reference_config)
