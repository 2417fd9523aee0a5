import contextlib

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")

_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


class _Criterion:
    def __init__(self, number, title):
        self.number, self.title, self.details = number, title, []

    def note(self, text):
        self.details.append(text)


@pytest.fixture
def criterion():
    """Context manager recording one pass/fail line per acceptance criterion."""
    @contextlib.contextmanager
    def run(number, title):
        c = _Criterion(number, title)
        try:
            yield c
        except BaseException as exc:
            c.note(f"{type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}")
            _record(c, False)
            raise
        _record(c, True)
    return run


def _record(c, ok):
    line = f"criterion {c.number:2d} {'PASS' if ok else 'FAIL'}  {c.title}"
    if c.details:
        line += "  [" + "; ".join(c.details) + "]"
    _ACCEPTANCE[c.number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[n])
