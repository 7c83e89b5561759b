import pytest

_CRITERIA: dict[int, list[tuple[str, str]]] = {}
_TITLES = {
    1: "gate templates",
    2: "scattering resonance and flux conservation",
    3: "cz emergence in the emitter cascade",
    4: "spectral infidelity model",
    5: "Purcell trend",
    6: "exact synthesis",
    7: "QFT physical depth",
    8: "gradient correctness",
    9: "training fidelities",
    10: "trained depth compactness",
    11: "CLI determinism",
}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(k): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _CRITERIA.setdefault(marker.args[0], []).append((item.name, report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_TITLES):
        runs = _CRITERIA.get(k)
        if not runs:
            status = "NOT RUN"
        elif all(o == "passed" for _, o in runs):
            status = "PASS"
        else:
            status = "FAIL"
        failed = [n for n, o in runs or [] if o != "passed"]
        extra = f" ({', '.join(failed)})" if failed else ""
        terminalreporter.write_line(f"criterion {k:2d} {_TITLES[k]}: {status}{extra}")
