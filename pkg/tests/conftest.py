import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "nvmag", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "nvmag"))

PT = 1e-12

_acceptance: list[tuple[str, str, str]] = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or report.when != "call":
        return
    status = "PASS" if report.passed else "FAIL"
    _acceptance.append((marker.args[0], marker.kwargs.get("title", item.name), status))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, status in sorted(_acceptance, key=lambda r: r[0]):
        terminalreporter.write_line(f"criterion {number:>2}: {status}  {title}")
    passed = sum(s == "PASS" for _, _, s in _acceptance)
    terminalreporter.write_line(f"{passed}/{len(_acceptance)} criteria pass")
