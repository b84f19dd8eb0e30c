"""Per-criterion pass/fail summary for the acceptance suite."""

CRITERIA = {
    1: "steady-state accuracy table (N = 32, 64, 128)",
    2: "shear-layer bounds (160x160 T=8 and 64x64 T=2)",
    3: "vortex-patch bounds with and without the limiter",
    4: "conservation for all limiter combinations",
    5: "discrete divergence-free velocity",
    6: "line limiter property suite",
    7: "weak monotonicity of the averaged update",
    8: "TVB limited update stays in range",
    9: "elliptic solvers versus dense solves and orders",
    10: "heat step maximum principle",
    11: "SSPRK3 scalar amplification factor",
}

_results = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_collection_modifyitems(items):
    for item in items:
        for m in item.iter_markers("criterion"):
            item.user_properties.append(("criterion", m.args[0]))


def pytest_runtest_logreport(report):
    nums = [v for k, v in report.user_properties if k == "criterion"]
    if not nums:
        return
    ok = not report.failed
    if report.when == "call" or not ok:
        for n in nums:
            _results.setdefault(n, []).append(ok and not report.skipped)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        runs = _results.get(n)
        status = "NOT RUN" if runs is None else ("PASS" if all(runs) else "FAIL")
        terminalreporter.write_line(f"criterion {n:2d}: {status:7s} {CRITERIA[n]}")
