"""Collects the per-criterion verdicts of the acceptance suite and prints them at the end of the run."""
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

VERDICTS = {}


def record(criterion: int, passed: bool, detail: str) -> None:
    VERDICTS[criterion] = (passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(VERDICTS):
        passed, detail = VERDICTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
