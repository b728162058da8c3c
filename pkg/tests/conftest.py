import pytest


@pytest.fixture
def criterion(request):
    """Record one acceptance verdict line and fail the test if it is negative."""
    lines = request.config.stash.setdefault(_LINES, [])

    def report(label, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {label}: {detail}"
        print(line)
        lines.append(line)
        assert ok, line

    return report


_LINES = pytest.StashKey[list]()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
