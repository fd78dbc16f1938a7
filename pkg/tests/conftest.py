import pytest

_LINES_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_LINES_KEY] = []


@pytest.fixture(scope="session")
def acceptance_log(request):
    lines = request.config.stash[_LINES_KEY]

    def record(number: int, title: str, passed: bool, detail: str, seconds: float):
        line = f"criterion {number} [{'PASS' if passed else 'FAIL'}] {title}: {detail} ({seconds:.1f}s)"
        lines.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_LINES_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda l: int(l.split()[1])):
            terminalreporter.write_line(line)
