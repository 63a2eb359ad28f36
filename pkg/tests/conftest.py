import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from padoa.instances import suite, tiny  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"

_criteria: dict[int, tuple[bool, str]] = {}


def record_criterion(number: int, ok: bool, detail: str) -> None:
    _criteria[number] = (bool(ok), detail)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_criteria):
        ok, detail = _criteria[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'} - {detail}")


@pytest.fixture
def tiny_problem():
    return tiny()


@pytest.fixture(scope="session")
def random_suite():
    return suite(50)
