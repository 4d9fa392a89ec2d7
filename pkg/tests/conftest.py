from __future__ import annotations

import numpy as np
import pytest

from three_wave_kinetics.grid_space import GridFunction

# the acceptance tests append (number, name, passed, detail) records here;
# the summary hook prints one line per criterion at the end of the run
ACCEPTANCE_RECORDS: list[tuple[int, str, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RECORDS:
        return
    terminalreporter.section("acceptance criteria")
    for num, name, ok, detail in sorted(ACCEPTANCE_RECORDS):
        tag = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"[{tag}] criterion {num:2d} ({name}): {detail}")


def log_bump(grid, center: float, width: float, amplitude: float) -> GridFunction:
    """Smooth compactly supported bump in log X, sampled on the grid."""
    u = (np.log(grid.nodes) - np.log(center)) / width
    out = np.zeros(grid.n)
    inside = np.abs(u) < 1.0
    out[inside] = amplitude * np.exp(1.0 - 1.0 / (1.0 - u[inside] ** 2))
    return GridFunction(grid, out)


@pytest.fixture
def bump():
    return log_bump
