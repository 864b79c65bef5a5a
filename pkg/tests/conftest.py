import pytest

ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line; returns whether it passed."""
    lines = request.config.stash[ACCEPTANCE]

    def record(label: str, passed: bool, measured: str, threshold: str) -> bool:
        status = "PASS" if passed else "FAIL"
        line = f"{label}: {status} measured={measured} threshold={threshold}"
        lines.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
