import numpy as np
import pytest

# criterion number -> (passed, detail), filled by test_acceptance
ACCEPTANCE = {}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def record():
    def _record(number, passed, detail):
        ACCEPTANCE[number] = (bool(passed), detail)
        return passed
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
