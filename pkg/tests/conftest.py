import pytest

# filled by tests/test_acceptance.py, printed after the run
CRITERIA_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if CRITERIA_LINES:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def criteria_lines():
    return CRITERIA_LINES
