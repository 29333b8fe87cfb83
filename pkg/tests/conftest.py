import itertools
import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from powerjsr import _backend

settings.register_profile(
    "default",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
    derandomize=True,
)
settings.load_profile("default")

BACKENDS = _backend.available()

GOLDEN = (np.array([[1.0, 1.0], [0.0, 1.0]]), np.array([[1.0, 0.0], [1.0, 1.0]]))
PHI = (1 + math.sqrt(5)) / 2


@pytest.fixture(params=BACKENDS)
def kern(request):
    return _backend.load(request.param)


def oracle_rho(a) -> float:
    """Spectral radius from LAPACK, independent of the package kernels."""
    return float(np.abs(np.linalg.eigvals(np.asarray(a, dtype=float))).max())


def oracle_norm(a, kind: str) -> float:
    ord_ = {"one": 1, "inf": np.inf, "two": 2, "fro": "fro"}[kind]
    return float(np.linalg.norm(np.asarray(a, dtype=float), ord_))


def all_words(n: int, length: int):
    return itertools.product(range(n), repeat=length)


def oracle_product(mats, word):
    out = np.eye(mats[0].shape[0])
    for i in word:
        out = out @ mats[i]
    return out


# ---- acceptance summary ---------------------------------------------------

ACCEPTANCE_RESULTS = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, title = marker.args[0], marker.args[1] if len(marker.args) > 1 else ""
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        prev = ACCEPTANCE_RESULTS.get(number, (title, True))[1]
        ACCEPTANCE_RESULTS[number] = (title, prev and rep.passed)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        title, passed = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} criterion {number}: {title}")
