import re

import pytest

_CRITERION = re.compile(r"test_criterion_(\d+)_(\w+)")
_results: dict[int, tuple[str, str]] = {}


@pytest.fixture(scope="session")
def warm_kernels():
    """Compile or load the numba kernels once so runtime budgets see warm code."""
    from rigidevo.evolve import hitting_times
    from rigidevo.graphs import complete_minus_edge
    from rigidevo.rigidity import closure, is_globally_rigid, is_rigid

    for d in (1, 2):
        G = complete_minus_edge(d + 3)
        is_rigid(G, d, 0)
        closure(G, d, 0)
        is_globally_rigid(G, d, 0)
    hitting_times(8, 1, with_global=True, rng=0)


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if not m:
        return
    num, label = int(m.group(1)), m.group(2).replace("_", " ")
    if report.when == "call" or report.outcome != "passed":
        if hasattr(report, "wasxfail") or report.outcome == "failed":
            verdict = "FAIL"
        elif report.outcome == "skipped":
            verdict = "SKIP"
        else:
            verdict = "PASS"
        # a criterion split over several tests reports its worst verdict
        prev, first_label = _results.get(num, ("PASS", label))
        _results[num] = (verdict if prev == "PASS" else prev, first_label)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_results):
        verdict, label = _results[num]
        terminalreporter.write_line(f"criterion {num:02d} {verdict} {label}")
