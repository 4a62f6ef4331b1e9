import pytest

_REPORT_LINES = []


@pytest.fixture
def acceptance_report():
    """Record one PASS/FAIL line per acceptance check and enforce it."""

    def record(tag: str, ok: bool, detail: str) -> None:
        line = f"[{tag}] {'PASS' if ok else 'FAIL'} - {detail}"
        print(line)
        _REPORT_LINES.append(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _REPORT_LINES:
        terminalreporter.section("acceptance report")
        for line in _REPORT_LINES:
            terminalreporter.write_line(line)
