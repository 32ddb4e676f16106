import pytest

from connexion import compute_coeffs

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def table1000():
    return compute_coeffs(1000)


@pytest.fixture(scope="session")
def table200(table1000):
    return table1000.truncated(200)


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
