"""Herbrand terms, substitutions, unification with occurs check, renaming.

Variables are split into two sorts.  Numeric variables stand for reals and
are never bound: when one meets another numeric variable or a numeric
literal, unification emits an ``Eq`` or ``In`` constraint instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from typing import Iterable, Mapping, Union

from .dro import Eq, In, Primitive
from .interval import parse_decimal_outward


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Compound:
    """``functor(args...)``; atoms are compounds with no arguments."""

    functor: str
    args: tuple["Term", ...] = ()

    def __post_init__(self):
        if not self.functor:
            raise ValueError("functor name must be nonempty")
        if not isinstance(self.args, tuple):
            object.__setattr__(self, "args", tuple(self.args))

    @property
    def key(self) -> tuple[str, int]:
        return self.functor, len(self.args)


@dataclass(frozen=True)
class NumLit:
    """A numeric literal; the text is kept so it can be read outward."""

    text: str

    @property
    def value(self) -> Decimal:
        try:
            return Decimal(self.text)
        except InvalidOperation:
            raise ValueError(f"not a numeric literal: {self.text!r}") from None


Term = Union[Var, Compound, NumLit]
Substitution = dict[str, Term]

NIL = Compound("nil")


def atom(name: str) -> Compound:
    return Compound(name)


def cons(head: Term, tail: Term) -> Compound:
    return Compound(".", (head, tail))


def pair(a: Term, b: Term) -> Compound:
    return Compound(":", (a, b))


def make_list(items: Iterable[Term], tail: Term = NIL) -> Term:
    out = tail
    for t in reversed(list(items)):
        out = cons(t, out)
    return out


def list_items(t: Term) -> list[Term] | None:
    """Elements of a nil-terminated cons list, or ``None`` if ``t`` is not one."""
    out = []
    while isinstance(t, Compound) and t.functor == "." and len(t.args) == 2:
        out.append(t.args[0])
        t = t.args[1]
    if t != NIL:
        return None
    return out


def walk(t: Term, s: Mapping[str, Term]) -> Term:
    """Follow variable bindings at the top of ``t``."""
    while isinstance(t, Var) and t.name in s:
        t = s[t.name]
    return t


def apply(t: Term, s: Mapping[str, Term]) -> Term:
    """``t`` with every bound variable replaced, recursively."""
    t = walk(t, s)
    if isinstance(t, Compound) and t.args:
        return Compound(t.functor, tuple(apply(a, s) for a in t.args))
    return t


def term_vars(t: Term, out: dict[str, None] | None = None) -> list[str]:
    """Variable names of ``t`` in order of first occurrence."""
    if out is None:
        out = {}
    stack = [t]
    while stack:
        x = stack.pop()
        if isinstance(x, Var):
            out.setdefault(x.name)
        elif isinstance(x, Compound):
            stack.extend(reversed(x.args))
    return list(out)


def is_ground(t: Term) -> bool:
    return not term_vars(t)


def _occurs(name: str, t: Term, s: Mapping[str, Term]) -> bool:
    stack = [t]
    while stack:
        x = walk(stack.pop(), s)
        if isinstance(x, Var):
            if x.name == name:
                return True
        elif isinstance(x, Compound):
            stack.extend(x.args)
    return False


def normalize(s: Mapping[str, Term]) -> Substitution:
    """Idempotent form of a triangular substitution."""
    return {k: apply(v, s) for k, v in s.items()}


def unify_into(
    t1: Term,
    t2: Term,
    s: Substitution,
    numeric: frozenset[str] | set[str] = frozenset(),
    out: list[Primitive] | None = None,
) -> tuple[Substitution, list[Primitive]] | None:
    """Extend the triangular substitution ``s`` to unify ``t1`` and ``t2``.

    ``s`` is not modified.  Numeric pairs are appended to the returned
    constraint list rather than bound.  Returns ``None`` on failure.
    """
    s = dict(s)
    cons_out: list[Primitive] = [] if out is None else list(out)
    stack = [(t1, t2)]
    while stack:
        a, b = stack.pop()
        a, b = walk(a, s), walk(b, s)
        if a == b:
            continue
        if isinstance(a, Var) and isinstance(b, Var):
            an, bn = a.name in numeric, b.name in numeric
            if an and bn:
                cons_out.append(Eq(a.name, b.name))
            elif an:
                s[b.name] = a
            else:
                s[a.name] = b
            continue
        if isinstance(b, Var):
            a, b = b, a
        if isinstance(a, Var):
            if a.name in numeric:
                if isinstance(b, NumLit):
                    cons_out.append(In(a.name, parse_decimal_outward(b.text)))
                    continue
                return None
            if _occurs(a.name, b, s):
                return None
            s[a.name] = b
            continue
        if isinstance(a, NumLit) and isinstance(b, NumLit):
            if a.value != b.value:
                return None
            continue
        if isinstance(a, Compound) and isinstance(b, Compound):
            if a.functor != b.functor or len(a.args) != len(b.args):
                return None
            stack.extend(zip(reversed(a.args), reversed(b.args)))
            continue
        return None
    return s, cons_out


def unify(
    t1: Term, t2: Term, numeric: Iterable[str] = ()
) -> tuple[Substitution, list[Primitive]] | None:
    """Most general unifier (idempotent) plus emitted numeric constraints."""
    res = unify_into(t1, t2, {}, frozenset(numeric))
    if res is None:
        return None
    s, cs = res
    return normalize(s), cs


def rename_term(t: Term, mapping: Mapping[str, str]) -> Term:
    if isinstance(t, Var):
        return Var(mapping.get(t.name, t.name))
    if isinstance(t, Compound) and t.args:
        return Compound(t.functor, tuple(rename_term(a, mapping) for a in t.args))
    return t


def fresh_name(name: str, step: int) -> str:
    return f"{name.split('#', 1)[0]}#{step}"


def display_name(name: str) -> str:
    """Render an internal variable name as a legal source variable."""
    if "#" in name:
        base, step = name.split("#", 1)
        return f"_{base}_{step}"
    return name


@dataclass(frozen=True)
class Clause:
    """``head :- guard ; body.`` with guard and body as tuples of terms."""

    head: Compound
    guard: tuple[Term, ...] = ()
    body: tuple[Compound, ...] = ()

    def terms(self) -> Iterable[Term]:
        yield self.head
        yield from self.guard
        yield from self.body

    def variables(self) -> list[str]:
        out: dict[str, None] = {}
        for t in self.terms():
            term_vars(t, out)
        return list(out)

    def numeric_vars(self) -> frozenset[str]:
        """Variables that occur in a guard constraint."""
        out: dict[str, None] = {}
        for g in self.guard:
            term_vars(g, out)
        return frozenset(out)


def rename_apart(clause: Clause, step: int) -> Clause:
    """Copy of ``clause`` whose variables are tagged with ``step``."""
    mapping = {v: fresh_name(v, step) for v in clause.variables()}
    if not mapping:
        return clause
    return Clause(
        rename_term(clause.head, mapping),
        tuple(rename_term(g, mapping) for g in clause.guard),
        tuple(rename_term(b, mapping) for b in clause.body),
    )


__all__ = [
    "Clause",
    "Compound",
    "NIL",
    "NumLit",
    "Substitution",
    "Term",
    "Var",
    "apply",
    "atom",
    "cons",
    "display_name",
    "is_ground",
    "list_items",
    "make_list",
    "normalize",
    "pair",
    "rename_apart",
    "term_vars",
    "unify",
    "unify_into",
    "walk",
]
