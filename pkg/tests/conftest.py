from __future__ import annotations

import pytest

from qwkb.builtins import resolve
from qwkb.entropy import analyze_poly


@pytest.fixture(scope="session")
def figure8():
    return analyze_poly(resolve("figure8").char_poly("angle"), 2048)


@pytest.fixture(scope="session")
def trefoil():
    return analyze_poly(resolve("trefoil").char_poly("angle"), 2048)


@pytest.fixture(scope="session")
def figure8_apoly():
    return analyze_poly(resolve("figure8").apoly.char_poly("half-angle"), 2048)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "VERDICTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
