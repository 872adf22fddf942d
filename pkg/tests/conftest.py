import pytest

from idprecon.core import AttributeSpec, Dataset, RangePredicate, Schema

INCOMES = [5, 8, 15, 16, 17, 18]


@pytest.fixture
def income_schema():
    return Schema((AttributeSpec("income", lower=0, upper=31),))


@pytest.fixture
def incomes(income_schema):
    return Dataset(income_schema, [[x] for x in INCOMES])


@pytest.fixture
def low_band():
    return RangePredicate.single(0, 1, 10)


_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def acceptance():
    """Record one summary line per acceptance criterion."""

    def record(number: int, ok: bool, detail: str) -> bool:
        _ACCEPTANCE[number] = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(_ACCEPTANCE[number])
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[number])
