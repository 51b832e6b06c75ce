"""Flattening of arithmetic (in)equalities into primitive constraints.

Every compound subterm gets a fresh variable holding its value, so that
``x * (x - 2) =< 0`` becomes ``sum(v, c, x), prod(x, v, w)`` together with
``c in [2, 2]`` and ``w in (-inf, 0]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from typing import Union

from .dro import Eq, In, Inv, Le, Primitive, Prod, Sum
from .interval import INF, Interval, parse_decimal_outward


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Const:
    """A numeric literal kept as source text so it can be read outward."""

    text: str

    def __str__(self) -> str:
        return self.text


@dataclass(frozen=True)
class Neg:
    e: "ArithExpr"

    def __str__(self) -> str:
        return f"-({self.e})"


@dataclass(frozen=True)
class Add:
    a: "ArithExpr"
    b: "ArithExpr"

    def __str__(self) -> str:
        return f"({self.a} + {self.b})"


@dataclass(frozen=True)
class Sub:
    a: "ArithExpr"
    b: "ArithExpr"

    def __str__(self) -> str:
        return f"({self.a} - {self.b})"


@dataclass(frozen=True)
class Mul:
    a: "ArithExpr"
    b: "ArithExpr"

    def __str__(self) -> str:
        return f"({self.a} * {self.b})"


@dataclass(frozen=True)
class Div:
    a: "ArithExpr"
    b: "ArithExpr"

    def __str__(self) -> str:
        return f"({self.a} / {self.b})"


ArithExpr = Union[Var, Const, Neg, Add, Sub, Mul, Div]

RELATIONS = ("=", "=<", ">=")


@dataclass(frozen=True)
class NumConstraint:
    lhs: ArithExpr
    rel: str
    rhs: ArithExpr

    def __post_init__(self):
        rel = {"<=": "=<", "≤": "=<", "≥": ">="}.get(self.rel, self.rel)
        if rel not in RELATIONS:
            raise ValueError(f"unknown relation {self.rel!r}")
        object.__setattr__(self, "rel", rel)

    def __str__(self) -> str:
        return f"{self.lhs} {self.rel} {self.rhs}"


@dataclass
class FreshNames:
    """Deterministic supply of auxiliary variable names.

    The default prefix cannot be produced by the parser, so generated
    names never clash with program variables.
    """

    prefix: str = "$"
    counter: int = 0

    def __call__(self) -> str:
        self.counter += 1
        return f"{self.prefix}{self.counter}"


@dataclass
class Flattened:
    constraints: list[Primitive] = field(default_factory=list)
    fresh: list[str] = field(default_factory=list)
    # fresh variable -> the subterm whose value it stands for
    defs: dict[str, ArithExpr] = field(default_factory=dict)


def const_value(c: Const) -> Decimal:
    try:
        return Decimal(c.text)
    except InvalidOperation:
        raise ValueError(f"not a numeric literal: {c.text!r}") from None


class _Flattener:
    def __init__(self, fresh: FreshNames):
        self.fresh = fresh
        self.out = Flattened()

    def new(self, e: ArithExpr) -> str:
        v = self.fresh()
        self.out.fresh.append(v)
        self.out.defs[v] = e
        return v

    def emit(self, c: Primitive) -> None:
        self.out.constraints.append(c)

    def var_of(self, e: ArithExpr) -> str:
        """Name of a variable equal to ``e``, creating one if needed."""
        if isinstance(e, Var):
            return e.name
        t = self.new(e)
        self.define(e, t)
        return t

    def define(self, e: ArithExpr, t: str) -> None:
        """Emit constraints forcing variable ``t`` to equal ``e``."""
        if isinstance(e, Var):
            self.emit(Eq(t, e.name))
        elif isinstance(e, Const):
            self.emit(In(t, parse_decimal_outward(e.text)))
        elif isinstance(e, Add):
            self.emit(Sum(self.var_of(e.a), self.var_of(e.b), t))
        elif isinstance(e, Sub):
            # a - b = t  <=>  t + b = a
            a, b = self.var_of(e.a), self.var_of(e.b)
            self.emit(Sum(t, b, a))
        elif isinstance(e, Neg):
            a = self.var_of(e.e)
            z = self.new(Const("0"))
            self.emit(In(z, Interval(0.0, 0.0)))
            self.emit(Sum(t, a, z))
        elif isinstance(e, Mul):
            self.emit(Prod(self.var_of(e.a), self.var_of(e.b), t))
        elif isinstance(e, Div):
            if isinstance(e.a, Const) and const_value(e.a) == 1:
                self.emit(Inv(self.var_of(e.b), t))
            else:
                # a / b = t  <=>  t * b = a
                a, b = self.var_of(e.a), self.var_of(e.b)
                self.emit(Prod(t, b, a))
        else:
            raise TypeError(f"not an arithmetic expression: {e!r}")

    def relate(self, nc: NumConstraint) -> None:
        lhs, rel, rhs = nc.lhs, nc.rel, nc.rhs
        if rel == ">=":
            lhs, rhs, rel = rhs, lhs, "=<"
        if rel == "=":
            if isinstance(rhs, Const):
                lhs, rhs = rhs, lhs
            if isinstance(lhs, Const):
                # c = e: a variable for e, pinned to c
                self.emit(In(self.var_of(rhs), parse_decimal_outward(lhs.text)))
            elif isinstance(rhs, Var):
                self.define(lhs, rhs.name)
            elif isinstance(lhs, Var):
                self.define(rhs, lhs.name)
            else:
                w = self.var_of(rhs)
                self.define(lhs, w)
            return
        # e1 =< e2
        if isinstance(rhs, Const):
            hi = parse_decimal_outward(rhs.text).hi
            self.emit(In(self.var_of(lhs), Interval(-INF, hi)))
        elif isinstance(lhs, Const):
            lo = parse_decimal_outward(lhs.text).lo
            self.emit(In(self.var_of(rhs), Interval(lo, INF)))
        else:
            self.emit(Le(self.var_of(lhs), self.var_of(rhs)))


def flatten(nc: NumConstraint, fresh: FreshNames | None = None) -> Flattened:
    """Primitive constraints equivalent to ``nc`` once fresh variables are hidden.

    Constants become fresh variables pinned by ``In`` to the outward
    reading of their text; ``>=`` is turned around into ``=<``.
    """
    f = _Flattener(fresh if fresh is not None else FreshNames())
    f.relate(nc)
    return f.out


def node_count(e: ArithExpr | NumConstraint) -> int:
    if isinstance(e, NumConstraint):
        return node_count(e.lhs) + node_count(e.rhs) + 1
    if isinstance(e, (Var, Const)):
        return 1
    if isinstance(e, Neg):
        return 1 + node_count(e.e)
    return 1 + node_count(e.a) + node_count(e.b)


def variables(e: ArithExpr | NumConstraint) -> list[str]:
    """Variable names of ``e`` in order of first occurrence."""
    out: dict[str, None] = {}

    def walk(x):
        if isinstance(x, NumConstraint):
            walk(x.lhs)
            walk(x.rhs)
        elif isinstance(x, Var):
            out[x.name] = None
        elif isinstance(x, Neg):
            walk(x.e)
        elif isinstance(x, (Add, Sub, Mul, Div)):
            walk(x.a)
            walk(x.b)

    walk(e)
    return list(out)


__all__ = [
    "Add",
    "ArithExpr",
    "Const",
    "Div",
    "Flattened",
    "FreshNames",
    "Mul",
    "Neg",
    "NumConstraint",
    "Sub",
    "Var",
    "flatten",
    "node_count",
    "variables",
]
