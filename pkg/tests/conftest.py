import re
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

_CRITERION = re.compile(r"test_criterion_(\d+)_")
_verdicts: dict[int, str] = {}


def pytest_runtest_logreport(report):
    match = _CRITERION.search(report.nodeid)
    if not match:
        return
    n = int(match.group(1))
    if report.failed:
        _verdicts[n] = "FAIL"
    elif report.when == "call" and report.passed:
        _verdicts.setdefault(n, "PASS")


def pytest_terminal_summary(terminalreporter):
    if not _verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_verdicts):
        terminalreporter.write_line(f"criterion {n}: {_verdicts[n]}")
