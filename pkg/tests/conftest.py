import numpy as np
import pytest

from arzdetect.model import Grid, TrafficParams, check_regime


@pytest.fixture(scope="session")
def params():
    return TrafficParams()


@pytest.fixture(scope="session")
def consts(params):
    return check_regime(params)


@pytest.fixture(scope="session")
def grid(params, consts):
    return Grid.from_cfl(params.L, 200, consts)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# -- acceptance report ---------------------------------------------------

_ACCEPTANCE: dict = {}


@pytest.fixture
def verdict():
    """``verdict(n, ok, detail)`` records and prints one pass/fail line per criterion."""

    def record(n: int, ok: bool, detail: str) -> bool:
        line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE[n] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[n])
