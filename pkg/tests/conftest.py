from pathlib import Path

import pytest

from intentrec.kb import load_kb, parse_kb
from intentrec.transcript import load_transcript

FIXTURES = Path(__file__).resolve().parents[1] / "src" / "intentrec" / "fixtures"
DEMOS = sorted((FIXTURES / "demos").glob("*.demo"))

XYZ_KB = """
(primitive A 0) (primitive B 0) (primitive C 0)
(abstract X 0) (abstract Y 0) (abstract Z 0)
(schema (cause X ()) (vars) (effects (A) (B)))
(schema (cause Y ()) (vars) (effects (C)))
(schema (cause Z ()) (vars) (effects (A) (B) (C)))
"""


@pytest.fixture(scope="session")
def xyz_kb():
    return parse_kb(XYZ_KB)


@pytest.fixture(scope="session")
def battery_kb():
    return load_kb(FIXTURES / "battery.kb")


@pytest.fixture(scope="session")
def relocate_kb():
    return load_kb(FIXTURES / "relocate.kb")


@pytest.fixture(scope="session")
def spare_demo():
    return load_transcript(FIXTURES / "demos" / "replace-red-with-spare-1.demo")


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
