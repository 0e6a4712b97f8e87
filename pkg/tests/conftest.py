from __future__ import annotations

import pytest

from qamp import RepeaterParams

ROW1 = dict(p=6e-4, q=1.0, R=0.12, eta_d=0.9, eta_m=0.9, total_length_km=1000.0, nesting_levels=4)
ROW2 = dict(ROW1, p=3.6e-3, R=0.23)
ROW3 = dict(ROW1, q=0.66, R=0.17)

# Filled by the acceptance module; echoed once at the end of the run.
ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def row1() -> RepeaterParams:
    return RepeaterParams(**ROW1)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
