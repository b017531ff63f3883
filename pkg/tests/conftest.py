import re

from hypothesis import settings

# fixed example streams keep reruns of the suite identical
settings.register_profile("repo", derandomize=True)
settings.load_profile("repo")

_AC = re.compile(r"test_acceptance\.py::test_(ac\d)_")
_results: dict = {}


def pytest_runtest_logreport(report):
    m = _AC.search(report.nodeid)
    if not m:
        return
    failed = report.failed or (report.when == "call" and report.outcome != "passed")
    key = m.group(1).upper()
    entry = _results.setdefault(key, {"tests": set(), "failed": set()})
    entry["tests"].add(report.nodeid)
    if failed:
        entry["failed"].add(report.nodeid)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_results, key=lambda k: int(k[2:])):
        entry = _results[key]
        if entry["failed"]:
            names = ", ".join(sorted(n.split("::")[-1] for n in entry["failed"]))
            terminalreporter.write_line(f"{key} FAIL ({names})")
        else:
            terminalreporter.write_line(f"{key} PASS")
