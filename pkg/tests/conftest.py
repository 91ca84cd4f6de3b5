import pathlib

import pytest

DATA = pathlib.Path(__file__).resolve().parents[1] / "src" / "shapecalc" / "data"

# criterion number -> (passed, description, detail); filled by test_acceptance
ACCEPTANCE: dict = {}


@pytest.fixture(scope="session")
def data_dir():
    return DATA


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, desc, detail = ACCEPTANCE[k]
        tr.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {k:2d}: {desc} -- {detail}")
