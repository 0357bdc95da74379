import time
from contextlib import contextmanager

import pytest

_RESULTS: dict[int, str] = {}


class Criterion:
    """Times one acceptance criterion and records a one-line verdict."""

    def __init__(self, number: int, title: str, budget_s: float):
        self.number, self.title, self.budget_s = number, title, budget_s
        self.details: list[str] = []

    def note(self, text: str) -> None:
        self.details.append(text)

    @contextmanager
    def run(self):
        t0 = time.perf_counter()
        ok = False
        try:
            yield self
            ok = True
        finally:
            elapsed = time.perf_counter() - t0
            slow = elapsed > self.budget_s
            verdict = "PASS" if ok and not slow else "FAIL"
            extra = "; ".join(self.details)
            if slow:
                extra = f"over time budget {self.budget_s:g} s; {extra}"
            line = f"criterion {self.number} {verdict}: {self.title} ({elapsed:.1f} s)"
            if extra:
                line += f": {extra}"
            _RESULTS[self.number] = line
            print(line)
        if elapsed > self.budget_s:
            pytest.fail(f"criterion {self.number} took {elapsed:.1f} s, budget {self.budget_s:g} s")


@pytest.fixture
def criterion():
    return Criterion


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_RESULTS):
        terminalreporter.write_line(_RESULTS[n])
