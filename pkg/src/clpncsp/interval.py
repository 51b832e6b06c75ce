"""Floating-point intervals with outward-rounded arithmetic.

An :class:`Interval` denotes a closed set of reals ``[lo, hi]`` whose
endpoints are IEEE doubles.  Infinite endpoints denote unbounded sets, so
``[0, inf]`` is the non-negative half line and never contains ``inf`` itself.
The empty set has a single canonical value, :data:`EMPTY`.

Endpoint arithmetic is done in round-to-nearest and then corrected with
error-free transformations: when the nearest result is on the wrong side of
the exact value, the endpoint is moved one float outward.  This gives the
same result as hardware directed rounding without touching the FPU mode.
"""

from __future__ import annotations

import math
import re
from functools import lru_cache
from decimal import ROUND_CEILING, ROUND_FLOOR, Context, Decimal
from fractions import Fraction

INF = math.inf
MAX_FLOAT = 1.7976931348623157e308

__all__ = [
    "EMPTY",
    "FULL",
    "Interval",
    "UnsplittableError",
    "adjacent",
    "add",
    "arith",
    "div",
    "format_outward",
    "hull",
    "intersect",
    "make",
    "mul",
    "neg",
    "next_down",
    "next_up",
    "parse_decimal_outward",
    "point",
    "recip",
    "split",
    "sub",
]


def next_up(x: float) -> float:
    return math.nextafter(x, INF)


def next_down(x: float) -> float:
    return math.nextafter(x, -INF)


class UnsplittableError(ValueError):
    """Raised when an interval holds no float strictly inside it."""


class Interval:
    __slots__ = ("lo", "hi")

    lo: float
    hi: float

    def __init__(self, lo: float, hi: float) -> None:
        if lo != lo or hi != hi:
            raise ValueError("interval endpoints must not be NaN")
        if not lo <= hi or lo == INF or hi == -INF:
            raise ValueError(f"not a non-empty interval: [{lo}, {hi}]")
        # -0.0 normalizes to 0.0 so that equality and hashing are canonical
        object.__setattr__(self, "lo", lo + 0.0)
        object.__setattr__(self, "hi", hi + 0.0)

    def __setattr__(self, name, value):
        raise AttributeError("Interval is immutable")

    @property
    def is_empty(self) -> bool:
        return self is EMPTY

    @property
    def is_singleton(self) -> bool:
        return self is not EMPTY and self.lo == self.hi

    @property
    def is_bounded(self) -> bool:
        return self is not EMPTY and -INF < self.lo and self.hi < INF

    @property
    def width(self) -> float:
        """Width rounded upward; ``inf`` for unbounded intervals."""
        if self is EMPTY:
            return 0.0
        return _sub_up(self.hi, self.lo)

    def __contains__(self, x) -> bool:
        if self is EMPTY:
            return False
        return self.lo <= x <= self.hi

    def subset(self, other: Interval) -> bool:
        if self is EMPTY:
            return True
        if other is EMPTY:
            return False
        return other.lo <= self.lo and self.hi <= other.hi

    def __eq__(self, other) -> bool:
        if not isinstance(other, Interval):
            return NotImplemented
        if self is EMPTY or other is EMPTY:
            return self is other
        return self.lo == other.lo and self.hi == other.hi

    def __hash__(self) -> int:
        if self is EMPTY:
            return hash("EMPTY")
        return hash((self.lo, self.hi))

    def __repr__(self) -> str:
        if self is EMPTY:
            return "EMPTY"
        return f"Interval({self.lo!r}, {self.hi!r})"

    def __str__(self) -> str:
        if self is EMPTY:
            return "empty"
        return f"[{_fmt_end(self.lo)},{_fmt_end(self.hi)}]"

    def __add__(self, other: Interval) -> Interval:
        return add(self, other)

    def __sub__(self, other: Interval) -> Interval:
        return sub(self, other)

    def __mul__(self, other: Interval) -> Interval:
        return mul(self, other)

    def __neg__(self) -> Interval:
        return neg(self)

    def __and__(self, other: Interval) -> Interval:
        return intersect(self, other)

    def __or__(self, other: Interval) -> Interval:
        return hull(self, other)


def _make_empty() -> Interval:
    e = object.__new__(Interval)
    object.__setattr__(e, "lo", INF)
    object.__setattr__(e, "hi", -INF)
    return e


EMPTY = _make_empty()
FULL = Interval(-INF, INF)


def _fmt_end(x: float) -> str:
    if x == INF:
        return "+inf"
    if x == -INF:
        return "-inf"
    if x == int(x) and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def make(lo: float, hi: float) -> Interval:
    """``[lo, hi]``, or :data:`EMPTY` when the bounds are crossed."""
    if lo != lo or hi != hi:
        raise ValueError("interval endpoints must not be NaN")
    if lo > hi or lo == INF or hi == -INF:
        return EMPTY
    return Interval(lo, hi)


def point(x: float) -> Interval:
    return Interval(x, x)


def intersect(a: Interval, b: Interval) -> Interval:
    if a is EMPTY or b is EMPTY:
        return EMPTY
    lo = a.lo if a.lo >= b.lo else b.lo
    hi = a.hi if a.hi <= b.hi else b.hi
    if lo > hi:
        return EMPTY
    if lo == a.lo and hi == a.hi:
        return a
    if lo == b.lo and hi == b.hi:
        return b
    return Interval(lo, hi)


def hull(a: Interval, b: Interval) -> Interval:
    if a is EMPTY:
        return b
    if b is EMPTY:
        return a
    return Interval(min(a.lo, b.lo), max(a.hi, b.hi))


def adjacent(a: Interval, b: Interval) -> bool:
    """True when ``a`` and ``b`` overlap or share an endpoint."""
    return a.hi >= b.lo and b.hi >= a.lo


# ---------------------------------------------------------------------------
# Directed endpoint operations
#
# Each *_down / *_up returns the largest / smallest float below / above the
# exact real result.  Inputs are floats, possibly infinite; callers never pass
# inf - inf or 0 * inf (those are resolved at the interval level).
# ---------------------------------------------------------------------------

_SPLITTER = 134217729.0  # 2**27 + 1
_EFT_HI = 2.0**500
_EFT_LO = 2.0**-450


def _two_sum_err(a: float, b: float, s: float) -> float:
    bb = s - a
    return (a - (s - bb)) + (b - bb)


def _split(a: float) -> tuple[float, float]:
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def _two_prod_err(a: float, b: float, p: float) -> float:
    ah, al = _split(a)
    bh, bl = _split(b)
    return ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _eft_safe(*xs: float) -> bool:
    for x in xs:
        ax = abs(x)
        if ax != 0.0 and not (_EFT_LO < ax < _EFT_HI):
            return False
    return True


def _cmp_exact(approx: float, exact: Fraction) -> int:
    """Sign of ``exact - approx``."""
    fa = Fraction(approx)
    return (exact > fa) - (exact < fa)


def _overflowed(r: float, down: bool) -> float:
    # finite operands whose nearest result overflowed
    if r > 0:
        return MAX_FLOAT if down else INF
    return -INF if down else -MAX_FLOAT


def _add_dir(a: float, b: float, down: bool) -> float:
    s = a + b
    if math.isinf(s):
        if math.isinf(a) or math.isinf(b):
            return s
        return _overflowed(s, down)
    if _eft_safe(a, b, s):
        err = _two_sum_err(a, b, s)
        sign = (err > 0) - (err < 0)
    else:
        sign = _cmp_exact(s, Fraction(a) + Fraction(b))
    if down and sign < 0:
        return next_down(s)
    if not down and sign > 0:
        return next_up(s)
    return s


def _add_down(a: float, b: float) -> float:
    return _add_dir(a, b, True)


def _add_up(a: float, b: float) -> float:
    return _add_dir(a, b, False)


def _sub_down(a: float, b: float) -> float:
    return _add_dir(a, -b, True)


def _sub_up(a: float, b: float) -> float:
    return _add_dir(a, -b, False)


def _mul_dir(a: float, b: float, down: bool) -> float:
    if a == 0.0 or b == 0.0:
        # reals times zero are zero, including unbounded endpoints
        return 0.0
    p = a * b
    if math.isinf(p):
        if math.isinf(a) or math.isinf(b):
            return p
        return _overflowed(p, down)
    if p != 0.0 and _eft_safe(a, b, p):
        err = _two_prod_err(a, b, p)
        sign = (err > 0) - (err < 0)
    else:
        sign = _cmp_exact(p, Fraction(a) * Fraction(b))
    if down and sign < 0:
        return next_down(p)
    if not down and sign > 0:
        return next_up(p)
    return p


def _div_dir(a: float, b: float, down: bool) -> float:
    if math.isinf(b):
        if math.isinf(a):
            raise AssertionError("inf/inf endpoint division")
        return 0.0
    if a == 0.0:
        return 0.0
    q = a / b
    if math.isinf(q):
        if math.isinf(a):
            return q
        return _overflowed(q, down)
    if q != 0.0 and _eft_safe(a, b, q):
        p = q * b
        if _eft_safe(p):
            err = _two_prod_err(q, b, p)
            resid = (a - p) - err  # exact: a - q*b
            sign = (resid > 0) - (resid < 0)
            if b < 0:
                sign = -sign
        else:
            sign = _cmp_exact(q, Fraction(a) / Fraction(b))
    else:
        sign = _cmp_exact(q, Fraction(a) / Fraction(b))
    if down and sign < 0:
        return next_down(q)
    if not down and sign > 0:
        return next_up(q)
    return q


# ---------------------------------------------------------------------------
# Interval arithmetic
# ---------------------------------------------------------------------------


def neg(a: Interval) -> Interval:
    if a is EMPTY:
        return EMPTY
    return Interval(-a.hi, -a.lo)


def add(a: Interval, b: Interval) -> Interval:
    if a is EMPTY or b is EMPTY:
        return EMPTY
    return Interval(_add_down(a.lo, b.lo), _add_up(a.hi, b.hi))


def sub(a: Interval, b: Interval) -> Interval:
    if a is EMPTY or b is EMPTY:
        return EMPTY
    return Interval(_sub_down(a.lo, b.hi), _sub_up(a.hi, b.lo))


def mul(a: Interval, b: Interval) -> Interval:
    if a is EMPTY or b is EMPTY:
        return EMPTY
    al, ah, bl, bh = a.lo, a.hi, b.lo, b.hi
    lo = min(
        _mul_dir(al, bl, True),
        _mul_dir(al, bh, True),
        _mul_dir(ah, bl, True),
        _mul_dir(ah, bh, True),
    )
    hi = max(
        _mul_dir(al, bl, False),
        _mul_dir(al, bh, False),
        _mul_dir(ah, bl, False),
        _mul_dir(ah, bh, False),
    )
    return Interval(lo, hi)


def arith(op: str, a: Interval, b: Interval) -> Interval:
    """Dispatch on ``op`` in ``{'+', '-', '*'}`` (``'−'`` and ``'×'`` also accepted)."""
    if op == "+":
        return add(a, b)
    if op in ("-", "−"):
        return sub(a, b)
    if op in ("*", "×"):
        return mul(a, b)
    raise ValueError(f"unknown operator {op!r}")


def _div_nonzero(a: Interval, b: Interval) -> Interval:
    # 0 not in b
    if b.lo > 0:
        if a.lo >= 0:
            return Interval(_div_dir(a.lo, b.hi, True), _div_dir(a.hi, b.lo, False))
        if a.hi <= 0:
            return Interval(_div_dir(a.lo, b.lo, True), _div_dir(a.hi, b.hi, False))
        return Interval(_div_dir(a.lo, b.lo, True), _div_dir(a.hi, b.lo, False))
    if a.lo >= 0:
        return Interval(_div_dir(a.hi, b.hi, True), _div_dir(a.lo, b.lo, False))
    if a.hi <= 0:
        return Interval(_div_dir(a.hi, b.lo, True), _div_dir(a.lo, b.hi, False))
    return Interval(_div_dir(a.hi, b.hi, True), _div_dir(a.lo, b.hi, False))


def _pieces(lo_piece: Interval | None, hi_piece: Interval | None) -> list[Interval]:
    out = [p for p in (lo_piece, hi_piece) if p is not None]
    if len(out) == 2 and out[0].hi >= out[1].lo:
        return [Interval(out[0].lo, out[1].hi)]
    return out


def div(a: Interval, b: Interval) -> list[Interval]:
    """Extended division: pieces covering ``{x/y | x in a, y in b, y != 0}``.

    Returns zero, one or two disjoint intervals, ordered left to right.
    """
    if a is EMPTY or b is EMPTY:
        return []
    if b.lo == 0.0 and b.hi == 0.0:
        return []
    if b.lo > 0 or b.hi < 0:
        return [_div_nonzero(a, b)]
    if a.lo == 0.0 and a.hi == 0.0:
        return [Interval(0.0, 0.0)]
    if a.lo < 0 < a.hi:
        return [FULL]
    if b.lo < 0 < b.hi:
        if a.lo >= 0:
            if a.lo == 0:
                return [FULL]
            return _pieces(
                Interval(-INF, _div_dir(a.lo, b.lo, False)),
                Interval(_div_dir(a.lo, b.hi, True), INF),
            )
        if a.hi == 0:
            return [FULL]
        return _pieces(
            Interval(-INF, _div_dir(a.hi, b.hi, False)),
            Interval(_div_dir(a.hi, b.lo, True), INF),
        )
    if b.lo == 0:  # y in (0, b.hi]
        if a.lo > 0:
            return [Interval(_div_dir(a.lo, b.hi, True), INF)]
        if a.hi < 0:
            return [Interval(-INF, _div_dir(a.hi, b.hi, False))]
        if a.lo == 0:
            return [Interval(0.0, INF)]
        return [Interval(-INF, 0.0)]
    # y in [b.lo, 0)
    if a.lo > 0:
        return [Interval(-INF, _div_dir(a.lo, b.lo, False))]
    if a.hi < 0:
        return [Interval(_div_dir(a.hi, b.lo, True), INF)]
    if a.lo == 0:
        return [Interval(-INF, 0.0)]
    return [Interval(0.0, INF)]


ONE = Interval(1.0, 1.0)


def recip(a: Interval) -> list[Interval]:
    return div(ONE, a)


# ---------------------------------------------------------------------------
# Splitting
# ---------------------------------------------------------------------------


def split_point(a: Interval) -> float:
    lo, hi = a.lo, a.hi
    if lo == -INF and hi == INF:
        return 0.0
    if hi == INF:
        m = max(2.0 * abs(lo), 1.0)
        if m == INF or m <= lo:
            m = next_up(lo) if lo < MAX_FLOAT else INF
        return m if m < INF else MAX_FLOAT
    if lo == -INF:
        m = -max(2.0 * abs(hi), 1.0)
        if m == -INF or m >= hi:
            m = next_down(hi) if hi > -MAX_FLOAT else -INF
        return m if m > -INF else -MAX_FLOAT
    m = lo / 2.0 + hi / 2.0
    if not lo < m < hi:
        m = next_up(lo)
    return m


def splittable(a: Interval) -> bool:
    if a is EMPTY or a.lo == a.hi:
        return False
    m = split_point(a)
    return a.lo < m < a.hi


def split(a: Interval) -> tuple[Interval, Interval]:
    """Cut ``a`` at an interior float into ``[lo, m]`` and ``[m, hi]``."""
    if not splittable(a):
        raise UnsplittableError(f"unsplittable interval {a}")
    m = split_point(a)
    return Interval(a.lo, m), Interval(m, a.hi)


# ---------------------------------------------------------------------------
# Decimal input and output
# ---------------------------------------------------------------------------

DECIMAL_RE = re.compile(r"[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?")
INF_WORDS = {"inf": INF, "+inf": INF, "-inf": -INF}


@lru_cache(maxsize=4096)
def parse_decimal_outward(text: str) -> Interval:
    """Smallest float interval containing the exact value of a decimal numeral.

    ``"-inf"`` yields an interval whose lower end is ``-inf``; ``"inf"`` one
    whose upper end is ``inf``.  These only make sense as bra-ket endpoints.
    """
    t = text.strip()
    if t in INF_WORDS:
        return Interval(-INF, -MAX_FLOAT) if t == "-inf" else Interval(MAX_FLOAT, INF)
    if not DECIMAL_RE.fullmatch(t):
        raise ValueError(f"malformed decimal numeral: {text!r}")
    exact = Fraction(t)
    try:
        f = float(exact)
    except OverflowError:
        f = INF if exact > 0 else -INF
    if math.isinf(f):
        return Interval(MAX_FLOAT, INF) if f > 0 else Interval(-INF, -MAX_FLOAT)
    fx = Fraction(f)
    if fx == exact:
        return Interval(f, f)
    if fx < exact:
        return Interval(f, next_up(f))
    return Interval(next_down(f), f)


def _dec_round(x: float, digits: int, rounding: str) -> str:
    if x == INF:
        return "+inf"
    if x == -INF:
        return "-inf"
    d = Decimal(x)
    if d == 0:
        return "0"
    ctx = Context(prec=digits, rounding=rounding)
    r = ctx.plus(d).normalize(ctx)
    s = format(r, "f") if -30 < r.adjusted() < 30 else str(r)
    return s


def format_endpoint(x: float, digits: int, lower: bool) -> str:
    return _dec_round(x, digits, ROUND_FLOOR if lower else ROUND_CEILING)


def format_outward(a: Interval, digits: int = 17) -> str:
    """``[L,U]`` with ``L`` rounded down and ``U`` up to ``digits`` significant digits."""
    if a is EMPTY:
        return "empty"
    if digits < 1:
        raise ValueError("digits must be positive")
    return f"[{format_endpoint(a.lo, digits, True)},{format_endpoint(a.hi, digits, False)}]"


_INTERVAL_TEXT = re.compile(r"\[\s*([^,\]]+?)\s*,\s*([^,\]]+?)\s*\]")


def parse_interval(text: str) -> Interval:
    """Read ``[L,U]`` or ``empty`` back, widening each end outward."""
    t = text.strip()
    if t == "empty":
        return EMPTY
    m = _INTERVAL_TEXT.fullmatch(t)
    if not m:
        raise ValueError(f"malformed interval text: {text!r}")
    return make(parse_decimal_outward(m.group(1)).lo, parse_decimal_outward(m.group(2)).hi)
