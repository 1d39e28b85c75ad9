import pytest

_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line per acceptance criterion; returns the flag."""
    def record(criterion: int, ok: bool, detail: str) -> bool:
        line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'} | {detail}"
        _ACCEPTANCE[criterion] = line
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[k])
