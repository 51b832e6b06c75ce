import math
import sys
from fractions import Fraction
from pathlib import Path

from hypothesis import strategies as st

from clpncsp.interval import Interval

PROGRAMS = Path(__file__).resolve().parent.parent / "programs"

finite = st.floats(min_value=-1e12, max_value=1e12, allow_nan=False, allow_infinity=False)
endpoint = st.one_of(finite, finite, finite, st.just(math.inf), st.just(-math.inf), st.just(0.0))


@st.composite
def intervals(draw, bounded=False):
    e = finite if bounded else endpoint
    a, b = draw(e), draw(e)
    lo, hi = min(a, b), max(a, b)
    if lo == math.inf or hi == -math.inf:
        lo, hi = -math.inf, math.inf
    return Interval(lo, hi)


@st.composite
def members(draw, a: Interval):
    """An exact rational inside a non-empty interval."""
    lo = Fraction(a.lo) if math.isfinite(a.lo) else None
    hi = Fraction(a.hi) if math.isfinite(a.hi) else None
    if lo is None and hi is None:
        return Fraction(draw(finite))
    if lo is None:
        return hi - abs(Fraction(draw(finite)))
    if hi is None:
        return lo + abs(Fraction(draw(finite)))
    t = Fraction(draw(st.integers(0, 2**20)), 2**20)
    return lo + (hi - lo) * t


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
