import pytest

_LINES = []


class _Criterion:
    def __init__(self, number, title):
        self.number = number
        self.title = title

    def check(self, ok, detail):
        line = f"criterion {self.number:>2} {'PASS' if ok else 'FAIL'}  {self.title}: {detail}"
        _LINES.append((self.number, line))
        print(line)
        assert ok, line


@pytest.fixture
def criterion():
    return _Criterion


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_LINES):
        terminalreporter.write_line(line)
