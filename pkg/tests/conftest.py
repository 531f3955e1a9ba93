import numpy as np
import pytest

from gridwiener import generate_graph

# Parameter ranges of the desk-scale simulation fixtures.  At t_s = 0.01 they
# keep the model's Wiener filters short enough for a 20-tap FIR window.
DESK_RANGES = dict(b_range=(0.5, 2.0), m_range=(0.0015, 0.0025), d_range=(0.15, 0.25))
# Parameter ranges for analytic oracle checks.
ORACLE_RANGES = dict(b_range=(0.5, 2.0), m_range=(0.5, 2.0), d_range=(0.5, 2.0))


def desk_graph(kind, n, seed=0):
    return generate_graph(kind, n, seed, **DESK_RANGES)


def oracle_graphs():
    """Every graph of the analytic oracle suite, as ``(label, graph)``."""
    out = []
    for n in range(3, 7):
        out.append((f"path{n}", generate_graph("path", n, n, **ORACLE_RANGES)))
    for n in range(4, 7):
        out.append((f"star{n}", generate_graph("star", n, 10 + n, **ORACLE_RANGES)))
    for n in range(4, 7):
        out.append((f"cycle{n}", generate_graph("cycle", n, 20 + n, **ORACLE_RANGES)))
    rng = np.random.default_rng(2024)
    for k in range(20):
        n = int(rng.integers(4, 13))
        out.append((f"loopy{k}_n{n}", generate_graph("random_loopy", n, 100 + k, **ORACLE_RANGES)))
    return out


@pytest.fixture(scope="session")
def oracle_suite():
    return oracle_graphs()


# -- acceptance reporting -----------------------------------------------------

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, text): acceptance criterion checked by this test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or report.when not in ("setup", "call"):
        return
    number, text = mark.args
    if report.when == "call" or report.failed:
        _CRITERIA[number] = (text, "PASS" if report.passed else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        text, verdict = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number}: {verdict}  {text}")
