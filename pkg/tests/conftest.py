import pytest

_CRITERIA: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion():
    """Record one acceptance line: criterion(number, passed, note)."""

    def record(n: int, passed: bool, note: str = "") -> None:
        prev = _CRITERIA.get(n)
        ok = passed and (prev is None or prev[0])
        notes = note if prev is None else "; ".join(x for x in (prev[1], note) if x)
        _CRITERIA[n] = (ok, notes)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        ok, note = _CRITERIA[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n:2d}: {note}")
