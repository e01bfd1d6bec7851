import pytest

# (criterion, passed, seconds, limit, detail) collected by the acceptance tests
ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    def record(name, passed, seconds, limit, detail=""):
        ok = bool(passed) and seconds < limit
        ACCEPTANCE_LINES.append((name, ok, seconds, limit, detail))
        print(f"{'PASS' if ok else 'FAIL'}  {name}  ({seconds:.2f}s / {limit:.0f}s)  {detail}")
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, seconds, limit, detail in ACCEPTANCE_LINES:
        terminalreporter.write_line(
            f"{'PASS' if ok else 'FAIL'}  {name:<34} {seconds:7.2f}s (limit {limit:.0f}s)  {detail}")
