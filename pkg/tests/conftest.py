import pytest
from hypothesis import settings

# numba compiles on first call, which would trip the per-example deadline
settings.register_profile("default", deadline=None)
settings.load_profile("default")

RESULTS = {}


@pytest.fixture
def record():
    """record(n, ok, detail) stores one acceptance line for the terminal summary."""
    def _rec(n, ok, detail=""):
        RESULTS[n] = (bool(ok), detail)
        print(f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}")
    return _rec


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        ok, detail = RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
