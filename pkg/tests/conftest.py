from __future__ import annotations

from datetime import datetime, timezone

import numpy as np
import pytest

from windres.core_types import WindSeries

T0 = datetime(2016, 1, 1, tzinfo=timezone.utc)


def make_series(values, step: int = 600) -> WindSeries:
    return WindSeries(start_time=T0, step=step, values=np.asarray(values, dtype=float))


def inverse_cdf_weibull(beta: float, lam: float, theta: float, n: int, seed: int) -> np.ndarray:
    """Test-side sampler: independent of the library's own sampling helpers."""
    rng = np.random.default_rng(seed)
    u = 1.0 - rng.random(n)
    return theta + lam * (-np.log(u)) ** (1.0 / beta)


@pytest.fixture
def series_factory():
    return make_series


# --------------------------------------------------------------------------- acceptance reporting

_ACCEPTANCE: dict[str, list] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion implemented by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    entry = _ACCEPTANCE.setdefault(str(number), [title, "PASS", ""])
    if report.skipped and entry[1] == "PASS":
        entry[1] = "SKIP"
        entry[2] = str(report.longrepr[-1]) if isinstance(report.longrepr, tuple) else ""
    elif report.failed:
        entry[1] = "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE, key=int):
        title, status, note = _ACCEPTANCE[number]
        line = f"criterion {number:>2} {status:<4} {title}"
        if note:
            line += f" ({note})"
        terminalreporter.write_line(line)
