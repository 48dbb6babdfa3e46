from __future__ import annotations

import sys
from pathlib import Path

import pytest

from cogcheck.frontend import load, load_file
from cogcheck.inference import analyse

ROOT = Path(__file__).resolve().parent.parent
PROGRAMS = ROOT / "programs"
sys.path.insert(0, str(Path(__file__).resolve().parent))

MATH_CLASS = (PROGRAMS / "math_nc.mabs").read_text().split("// driver")[0]


def math_driver(method: str, n: int) -> str:
    """The Math class with a main block that calls `method(n)` on a fresh cog."""
    return MATH_CLASS + f"""
{{
    Math m = new cog Math();
    Fut<Int> f = m!{method}({n});
    Int r = f.get;
}}
"""


DECO_SOURCE = """
interface IC { Unit m(IC c); Unit n(IC a); Unit q(); }
class C implements IC {
    Unit m(IC c) {
        IC w;
        w = new cog C();
        w!m(this);
        c!n(this);
    }
    Unit n(IC a) {
        Fut<Unit> x;
        x = a!q();
        x.get;
    }
    Unit q() { }
}
{
    IC a; IC b;
    Fut<Unit> x;
    a = new cog C();
    b = new cog C();
    x = a!m(b);
}
"""


@pytest.fixture(scope="session")
def math_tp():
    return load_file(PROGRAMS / "math.mabs")


@pytest.fixture(scope="session")
def math_solved(math_tp):
    return analyse(math_tp)


@pytest.fixture(scope="session")
def cpx_tp():
    return load_file(PROGRAMS / "cpxsched.mabs")


@pytest.fixture(scope="session")
def cpx_solved(cpx_tp):
    return analyse(cpx_tp)


def solved_driver(method: str, n: int = 2):
    return analyse(load(math_driver(method, n)))


# one line per acceptance criterion, printed after the run
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
