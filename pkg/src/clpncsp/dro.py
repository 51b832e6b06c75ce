"""Primitive constraints and their domain reduction operators.

Every operator takes the current domains of its arguments and returns
narrower domains that still contain every point of the box satisfying the
relation, or ``None`` when the box holds no such point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Union

from .interval import EMPTY, FULL, Interval, add, div, hull, intersect, mul, sub
from .interval import ONE

Domains = Mapping[str, Interval]


@dataclass(frozen=True)
class Sum:
    """x + y = z"""

    x: str
    y: str
    z: str

    @property
    def vars(self) -> tuple[str, ...]:
        return (self.x, self.y, self.z)

    def __str__(self) -> str:
        return f"sum({self.x},{self.y},{self.z})"


@dataclass(frozen=True)
class Prod:
    """x * y = z"""

    x: str
    y: str
    z: str

    @property
    def vars(self) -> tuple[str, ...]:
        return (self.x, self.y, self.z)

    def __str__(self) -> str:
        return f"prod({self.x},{self.y},{self.z})"


@dataclass(frozen=True)
class Inv:
    """x * y = 1"""

    x: str
    y: str

    @property
    def vars(self) -> tuple[str, ...]:
        return (self.x, self.y)

    def __str__(self) -> str:
        return f"inv({self.x},{self.y})"


@dataclass(frozen=True)
class Le:
    """x <= y"""

    x: str
    y: str

    @property
    def vars(self) -> tuple[str, ...]:
        return (self.x, self.y)

    def __str__(self) -> str:
        return f"{self.x} =< {self.y}"


@dataclass(frozen=True)
class Eq:
    """x = y"""

    x: str
    y: str

    @property
    def vars(self) -> tuple[str, ...]:
        return (self.x, self.y)

    def __str__(self) -> str:
        return f"{self.x} = {self.y}"


@dataclass(frozen=True)
class In:
    """x in a"""

    x: str
    a: Interval

    def __post_init__(self):
        if self.a is EMPTY:
            raise ValueError("In constraint needs a non-empty interval")

    @property
    def vars(self) -> tuple[str, ...]:
        return (self.x,)

    def __str__(self) -> str:
        from .interval import format_outward

        lo, hi = format_outward(self.a)[1:-1].split(",")
        return f"<{lo}|{self.x}|{hi}>"


Primitive = Union[Sum, Prod, Inv, Le, Eq, In]

# Operators applied once already sit at their own fixed point.
IDEMPOTENT = (Sum, Le, Eq, In)


def _meet_pieces(pieces: list[Interval], d: Interval) -> Interval:
    out = EMPTY
    for p in pieces:
        out = hull(out, intersect(p, d))
    return out


def dro_sum(dx: Interval, dy: Interval, dz: Interval):
    """Narrow ``(dx, dy, dz)`` under x + y = z, iterated to its own fixed point."""
    while True:
        nx = intersect(dx, sub(dz, dy))
        if nx is EMPTY:
            return None
        ny = intersect(dy, sub(dz, nx))
        if ny is EMPTY:
            return None
        nz = intersect(dz, add(nx, ny))
        if nz is EMPTY:
            return None
        if nx == dx and ny == dy and nz == dz:
            return nx, ny, nz
        dx, dy, dz = nx, ny, nz


def dro_prod(dx: Interval, dy: Interval, dz: Interval):
    """One projection pass for x * y = z: x, then y, then z."""
    nx = _meet_pieces(div(dz, dy), dx) if not (0.0 in dy and 0.0 in dz) else dx
    if nx is EMPTY:
        return None
    ny = _meet_pieces(div(dz, nx), dy) if not (0.0 in nx and 0.0 in dz) else dy
    if ny is EMPTY:
        return None
    nz = intersect(dz, mul(nx, ny))
    if nz is EMPTY:
        return None
    return nx, ny, nz


def dro_inv(dx: Interval, dy: Interval):
    """One projection pass for x * y = 1: y from x, then x from y."""
    ny = _meet_pieces(div(ONE, dx), dy)
    if ny is EMPTY:
        return None
    nx = _meet_pieces(div(ONE, ny), dx)
    if nx is EMPTY:
        return None
    return nx, ny


def dro_le(dx: Interval, dy: Interval):
    nx = intersect(dx, Interval(-float("inf"), dy.hi)) if dy is not EMPTY else EMPTY
    if nx is EMPTY:
        return None
    ny = intersect(dy, Interval(nx.lo, float("inf")))
    if ny is EMPTY:
        return None
    return nx, ny


def dro_eq(dx: Interval, dy: Interval):
    d = intersect(dx, dy)
    if d is EMPTY:
        return None
    return d, d


def dro_in(dx: Interval, a: Interval):
    d = intersect(dx, a)
    if d is EMPTY:
        return None
    return (d,)


def dro_eq_in(c: Eq | In, doms: tuple[Interval, ...]):
    """Reduction for ``Eq`` (two domains) or ``In`` (one domain)."""
    if isinstance(c, Eq):
        return dro_eq(*doms)
    return dro_in(doms[0], c.a)


def _positional(c: Primitive, doms: tuple[Interval, ...]):
    if isinstance(c, Sum):
        return dro_sum(*doms)
    if isinstance(c, Prod):
        return dro_prod(*doms)
    if isinstance(c, Inv):
        return dro_inv(*doms)
    if isinstance(c, Le):
        return dro_le(*doms)
    if isinstance(c, Eq):
        return dro_eq(*doms)
    if isinstance(c, In):
        return dro_in(doms[0], c.a)
    raise TypeError(f"not a primitive constraint: {c!r}")


def reduce(c: Primitive, box: Domains) -> dict[str, Interval] | None:
    """Narrowed domains of the variables of ``c``; ``None`` if inconsistent.

    Repeated variables (``Sum(x, x, z)``) get the intersection of their
    positional projections, and the operator is re-applied until those agree.
    """
    names = c.vars
    try:
        doms = tuple(box[v] for v in names)
    except KeyError as e:
        raise KeyError(f"variable {e.args[0]!r} of {c} is not in the box") from None
    distinct = len(set(names)) == len(names)
    while True:
        res = _positional(c, doms)
        if res is None:
            return None
        if distinct:
            return dict(zip(names, res))
        merged: dict[str, Interval] = {}
        for v, d in zip(names, res):
            merged[v] = intersect(merged[v], d) if v in merged else d
            if merged[v] is EMPTY:
                return None
        new = tuple(merged[v] for v in names)
        if new == doms or not isinstance(c, IDEMPOTENT):
            return merged
        doms = new


def apply_dro(c: Primitive, box):
    """Apply the operator of ``c`` to a box; other variables are untouched.

    Accepts a :class:`~clpncsp.csp.Box` or a plain mapping and returns the
    same kind, or the empty box.
    """
    from .csp import EMPTY_BOX, Box

    if isinstance(box, Box):
        if box.is_empty:
            return EMPTY_BOX
        red = reduce(c, box)
        if red is None:
            return EMPTY_BOX
        return box.update(red)
    red = reduce(c, box)
    if red is None:
        return None
    out = dict(box)
    out.update(red)
    return out


__all__ = [
    "Eq",
    "FULL",
    "IDEMPOTENT",
    "In",
    "Inv",
    "Le",
    "Primitive",
    "Prod",
    "Sum",
    "apply_dro",
    "dro_eq_in",
    "dro_inv",
    "dro_le",
    "dro_prod",
    "dro_sum",
    "reduce",
]
