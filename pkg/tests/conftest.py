import warnings

import numpy as np
import pytest

from scatseries import IntegratorConfig, NonlinearitySpec, PropagatorSpec, Scheme, SpatialGrid
from scatseries.profiles import random_profile


def rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    scale = np.linalg.norm(b)
    return float(np.linalg.norm(a - b) / (scale if scale > 0 else 1.0))


@pytest.fixture
def toy():
    grid = SpatialGrid.toy(4)
    return PropagatorSpec.toy(grid), NonlinearitySpec.toy_gauge_power(5, 1.0)


@pytest.fixture
def toy_cfg():
    return IntegratorConfig(dt=1e-2, horizon=10.0, scheme=Scheme.LAWSON_RK4)


@pytest.fixture
def small_nls():
    grid = SpatialGrid.periodic(40.0, 256)
    return PropagatorSpec.schrodinger(grid), NonlinearitySpec.gauge_power(5, 1.0)


@pytest.fixture
def small_kg():
    grid = SpatialGrid.periodic(40.0, 256)
    return PropagatorSpec.klein_gordon(grid), NonlinearitySpec.real_odd_power(3, 1.0)


@pytest.fixture
def quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        yield


def toy_data(grid, amp, seed):
    return random_profile(grid, amp, seed=seed)


# one summary line per acceptance criterion, printed at the end of the run
_CRITERIA = []


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        label = dict(report.user_properties).get("criterion", report.nodeid.split("::")[-1])
        detail = dict(report.user_properties).get("detail", "")
        verdict = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
        if hasattr(report, "wasxfail"):
            verdict = "XFAIL" if report.outcome == "skipped" else "XPASS"
        _CRITERIA.append(f"{verdict:5s} {label}  {detail}".rstrip())


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)
