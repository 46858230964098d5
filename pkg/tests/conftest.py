import pytest

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one acceptance line; all lines are echoed in the terminal summary."""

    def _add(label: str, passed: bool, detail: str):
        ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] {label}: {detail}")

    return _add


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
