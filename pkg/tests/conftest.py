import pytest

# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES = {}


@pytest.fixture
def acceptance_line():
    def record(number, passed, text):
        ACCEPTANCE_LINES[str(number)] = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {text}"
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
