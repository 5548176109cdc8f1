import pytest

_VERDICTS = []


@pytest.fixture
def verdict():
    """Record a one-line acceptance verdict; printed in the terminal summary."""

    def record(number, passed, detail):
        _VERDICTS.append((number, passed, detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(_VERDICTS, key=lambda v: v[0]):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail}")
