import pytest

from phishbench.dataset import split, synthesize_table

# Acceptance-criterion outcomes, filled in by tests/test_acceptance.py.
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def small_table():
    return synthesize_table(400, seed=3)


@pytest.fixture(scope="session")
def small_split(small_table):
    return split(small_table, 0.7, seed=3)


@pytest.fixture
def record_criterion():
    def record(name: str, passed: bool, detail: str = ""):
        ACCEPTANCE[name] = (passed, detail)
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE, key=lambda k: (len(k.split(" ")[0]), k)):
        passed, detail = ACCEPTANCE[name]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}".rstrip())
