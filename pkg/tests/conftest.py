import pytest

_ACCEPTANCE: dict = {}


@pytest.fixture(scope="session")
def acceptance_log():
    """record(n, title, passed, detail) -> one summary line per acceptance criterion."""

    def record(n: int, title: str, passed: bool, detail: str) -> None:
        _ACCEPTANCE[n] = (title, bool(passed), detail)
        print(f"AC{n} {'PASS' if passed else 'FAIL'}: {title} | {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        title, ok, detail = _ACCEPTANCE[n]
        terminalreporter.write_line(f"AC{n:<2} {'PASS' if ok else 'FAIL'}  {title} | {detail}")
