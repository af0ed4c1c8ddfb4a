import math
import time

import numpy as np
import pytest

from vmfsearch import experiment, hamiltonian

_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): exit criterion of the build")


def pytest_runtest_logreport(report):
    number = getattr(report, "criterion", None)
    if number is None or report.when == "teardown":
        return
    # setup time counts too, since shared fixtures do the heavy lifting for some criteria
    title, outcome, duration = _ACCEPTANCE.get(number, (report.criterion_title, "passed", 0.0))
    if report.outcome != "passed":
        outcome = report.outcome
    _ACCEPTANCE[number] = (title, outcome, duration + report.duration)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is not None:
        report.criterion, report.criterion_title = marker.args


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, outcome, duration = _ACCEPTANCE[number]
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {number}: {title} ({duration:.1f}s)")


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


@pytest.fixture
def timer():
    return Timer


def random_prepared(d, seed, window=hamiltonian.DEFAULT_WINDOW):
    H = experiment.random_hamiltonian(d, seed)
    scaled, W = hamiltonian.prepare(H, window)
    return H, scaled, W


def random_unit(rng, p, size=None):
    shape = (p,) if size is None else (size, p)
    x = rng.standard_normal(shape)
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


@pytest.fixture
def worked_w():
    """d = 2 diagonal Hamiltonian with ground phase π/6 on |0> and excited phase π/2."""
    spec = hamiltonian.eigendecompose(np.diag([math.pi / 6, math.pi / 2]))
    scaled = hamiltonian.ScaledHamiltonian(spec, 1.0, 0.0, 1.0, (math.pi / 6, math.pi / 2))
    return hamiltonian.build_w(scaled)
