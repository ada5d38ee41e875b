import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

# criterion -> (passed, detail), filled in by tests/test_acceptance.py
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def _reproduce(figure, out):
    from lpd.cli import main

    start = time.perf_counter()
    assert main(["reproduce", figure, "--out-dir", str(out)]) == 0
    return out, time.perf_counter() - start


@pytest.fixture(scope="session")
def fig3(tmp_path_factory):
    """The n=10 Fig. 3 tables produced once through the command line, with the wall time."""
    return _reproduce("fig3", tmp_path_factory.mktemp("fig3"))


@pytest.fixture(scope="session")
def fig4(tmp_path_factory):
    return _reproduce("fig4", tmp_path_factory.mktemp("fig4"))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE, key=lambda k: (len(k.split()[0]), k)):
        ok, detail = ACCEPTANCE[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
