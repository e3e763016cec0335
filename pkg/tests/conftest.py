from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from czlab.grid import Grid, Interval, SampledFunction

settings.register_profile("czlab", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("czlab")

_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, text): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n, text = mark.args
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        _CRITERIA[n] = ("PASS" if rep.passed else "FAIL", text)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        status, text = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d}: {status}  {text}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_grid(rng: np.random.Generator, n: int, lo: float = -1.0, hi: float = 2.0) -> Grid:
    """Non-uniform grid with n cells on (lo, hi)."""
    w = rng.uniform(0.2, 1.0, n)
    e = lo + (hi - lo) * np.concatenate([[0.0], np.cumsum(w)]) / w.sum()
    e[-1] = hi
    return Grid.from_edges(e)


def random_function(rng: np.random.Generator, n: int, sparse: bool = True) -> SampledFunction:
    g = random_grid(rng, n)
    v = rng.exponential(1.0, n)
    if sparse:
        v *= rng.random(n) < 0.4
    return SampledFunction(g, v)


def unit_indicator(grid: Grid) -> SampledFunction:
    x = grid.points
    return SampledFunction(grid, ((x > 0) & (x < 1)).astype(float))


UNIT = Interval(0.0, 1.0)
