from __future__ import annotations

import pytest

from quadpida.harness.scenario import bundled_scenario_path, load_scenario

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def bundled_gains():
    return dict(load_scenario(bundled_scenario_path("step")).gains)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
