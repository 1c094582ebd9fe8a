import pytest

from slicesim.config import preset
from slicesim.kpi import SimParams

_CRITERIA = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    _CRITERIA[number] = (passed, detail)


@pytest.fixture
def record():
    return record_criterion


@pytest.fixture
def small_config():
    return preset("chaser").replace(sim=SimParams(1e-3, 10, 6))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, 11):
        passed, detail = _CRITERIA.get(n, (False, "not run"))
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
