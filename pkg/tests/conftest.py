"""Shared fixtures plus a terminal summary line per acceptance criterion."""

import numpy as np
import pytest

import consist

_ACCEPTANCE_OUTCOMES = {}
_ACCEPTANCE_NOTES = {}


@pytest.fixture
def acceptance_notes():
    """Lets a criterion attach a short note (e.g. a measured time) to its
    summary line."""
    return _ACCEPTANCE_NOTES


@pytest.fixture(scope="session")
def toy_gsd_grid():
    """15 x 11 lattice, small enough for brute-force comparison."""
    return consist.build_grid("gsd", np.linspace(1, 5, 15), np.linspace(0, 1, 11))


@pytest.fixture(scope="session")
def coarse_gsd_grid():
    """Coarse but well-formed grid for end-to-end CLI runs."""
    return consist.build_grid(
        "gsd", np.round(np.arange(1.0, 5.01, 0.2), 10), np.round(np.arange(0.0, 1.01, 0.2), 10)
    )


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    name = report.nodeid.split("::test_criterion_", 1)[1]
    if report.when == "call":
        _ACCEPTANCE_OUTCOMES[name] = report.outcome
    elif report.when == "setup" and report.outcome != "passed":
        # setup failure or skip also decides the criterion
        _ACCEPTANCE_OUTCOMES[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_OUTCOMES:
        return
    terminalreporter.write_line("")
    terminalreporter.write_line("acceptance criteria")
    for name in sorted(_ACCEPTANCE_OUTCOMES):
        outcome = _ACCEPTANCE_OUTCOMES[name]
        verdict = "PASS" if outcome == "passed" else "FAIL"
        num, _, label = name.partition("_")
        note = _ACCEPTANCE_NOTES.get(name)
        suffix = f"  ({note})" if note else ""
        terminalreporter.write_line(
            f"  criterion {num} {label.replace('_', ' '):<42s} {verdict}{suffix}"
        )
