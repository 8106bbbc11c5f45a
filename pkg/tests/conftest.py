import pytest

# criterion -> (passed, summary); filled by test_acceptance.py
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def acceptance():
    def record(criterion: str, passed: bool, summary: str) -> None:
        ACCEPTANCE[criterion] = (bool(passed), summary)
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k[1:])):
        passed, summary = ACCEPTANCE[key]
        terminalreporter.write_line(f"{key} {'PASS' if passed else 'FAIL'}  {summary}")
