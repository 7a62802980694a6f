import numpy as np
import pytest

from mimetic_ops.grid import uniform_grid


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


@pytest.fixture
def periodic64():
    return uniform_grid(0.0, 2 * np.pi, 64, "periodic")


@pytest.fixture
def bounded64():
    return uniform_grid(0.0, 2 * np.pi, 64, "bounded")


def finite_difference_weights(offsets, derivative):
    """Weights of the interpolatory stencil on integer *offsets* for the
    given derivative, from the moment (Vandermonde) system."""
    offsets = np.asarray(offsets, dtype=np.float64)
    q = np.arange(offsets.size)
    vander = offsets[None, :] ** q[:, None]
    rhs = np.zeros(offsets.size)
    rhs[derivative] = float(np.prod(np.arange(1, derivative + 1)))
    return np.linalg.solve(vander, rhs)


# {{{ acceptance summary

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return

    number, title = marker.args
    entry = _CRITERIA.setdefault(number, [title, True])
    if report.failed or (report.when == "call" and report.skipped):
        entry[1] = False


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, passed = _CRITERIA[number]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d}: {status}  {title}")


# }}}
