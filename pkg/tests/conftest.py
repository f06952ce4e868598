import functools

import pytest

from volterra_ide.instance import build
from volterra_ide.problem import certify

ACCEPTANCE_LINES = []


def record(criterion, ok, detail=""):
    """Log one acceptance line; it is echoed in the terminal summary."""
    line = f"criterion {criterion:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@functools.lru_cache(maxsize=None)
def catalog_problem(name):
    return build({"catalog": name}).problem


@functools.lru_cache(maxsize=None)
def catalog_cert(name):
    return certify(catalog_problem(name), 2000, 0)


@pytest.fixture
def sinh():
    return catalog_problem("sinh"), catalog_cert("sinh")
