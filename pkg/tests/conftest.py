import time
from contextlib import contextmanager

import pytest

_LINES = {}


@contextmanager
def _criterion(number: int, title: str, limit: float | None):
    """Time a criterion body and record one pass/fail line for it.

    The body sets ``state["ok"]`` and ``state["detail"]``; exceeding
    ``limit`` seconds also counts as a failure.
    """
    state = {"ok": False, "detail": ""}
    t0 = time.perf_counter()
    try:
        yield state
    except Exception as exc:
        state["ok"] = False
        state["detail"] = f"{type(exc).__name__}: {exc}"
        raise
    finally:
        state["elapsed"] = time.perf_counter() - t0
        if limit is not None and state["elapsed"] >= limit:
            state["ok"] = False
            state["detail"] += f"; over the {limit:g} s limit"
        verdict = "PASS" if state["ok"] else "FAIL"
        line = f"criterion {number:2d} {title}: {verdict} ({state['detail']}; " \
               f"{state['elapsed']:.1f} s)"
        _LINES[number] = line
        print(line)


@pytest.fixture
def criterion():
    return _criterion


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_LINES):
            terminalreporter.write_line(_LINES[n])
