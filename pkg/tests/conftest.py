import pytest

from hybridop.model import SystemModel

ACCEPTANCE_LINES: list[str] = []


class CountingModel(SystemModel):
    """Wraps a model and counts step calls."""

    def __init__(self, inner):
        self.inner = inner
        self.calls = 0
        self.n_modes = inner.n_modes
        self.state_dim = inner.state_dim
        self.u_min, self.u_max = inner.u_min, inner.u_max

    def step(self, x, c, d):
        self.calls += 1
        return self.inner.step(x, c, d)


@pytest.fixture
def acceptance_report():
    def record(number: int, ok: bool, detail: str):
        ACCEPTANCE_LINES.append(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
