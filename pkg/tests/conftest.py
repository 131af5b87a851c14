import pytest

from menusize.dist import beta12, iid, uniform


@pytest.fixture(scope="session")
def U2():
    return iid(uniform())


@pytest.fixture(scope="session")
def B2():
    return iid(beta12())


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
