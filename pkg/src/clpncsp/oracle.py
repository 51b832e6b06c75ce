"""Exact reference semantics for testing: finite relations and rational sampling.

Nothing here uses floating-point arithmetic on constraint values; intervals
are read as exact rationals from their float endpoints.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from .dro import Eq, In, Inv, Le, Primitive, Prod, Sum
from .interval import Interval

Value = object


@dataclass(frozen=True)
class FiniteRelation:
    """A set of tuples indexed by variable names.

    ``index`` is sorted; each row lists values in that order.
    """

    index: tuple[str, ...]
    rows: frozenset[tuple]

    def __post_init__(self):
        idx = tuple(self.index)
        if list(idx) != sorted(set(idx)):
            raise ValueError("index must be sorted and duplicate-free")
        for r in self.rows:
            if len(r) != len(idx):
                raise ValueError("row length does not match the index")
        object.__setattr__(self, "index", idx)
        object.__setattr__(self, "rows", frozenset(self.rows))

    @classmethod
    def of(cls, index: Sequence[str], rows: Iterable[Sequence]) -> FiniteRelation:
        """Relation from rows given in ``index`` order (any order of names)."""
        order = sorted(range(len(index)), key=lambda i: index[i])
        names = tuple(index[i] for i in order)
        return cls(names, frozenset(tuple(r[i] for i in order) for r in rows))

    def __len__(self) -> int:
        return len(self.rows)

    def as_dicts(self) -> list[dict[str, Value]]:
        return [dict(zip(self.index, r)) for r in self.rows]

    def project(self, names: Sequence[str]) -> set[tuple]:
        pos = [self.index.index(n) for n in names]
        return {tuple(r[p] for p in pos) for r in self.rows}

    def contains(self, assignment: Mapping[str, Value]) -> bool:
        return tuple(assignment[n] for n in self.index) in self.rows


def relation_on(rho: Iterable[Sequence], v: Sequence[str]) -> FiniteRelation:
    """Rows ``t`` of ``rho`` read as assignments ``v[i] := t[i]``.

    Tuples that give a repeated variable two different values are dropped.
    """
    rho = [tuple(t) for t in rho]
    for t in rho:
        if len(t) != len(v):
            raise ValueError(f"relation of arity {len(t)} placed on {len(v)} variables")
    names = sorted(set(v))
    rows = set()
    for t in rho:
        a: dict[str, Value] = {}
        ok = True
        for name, val in zip(v, t):
            if name in a and a[name] != val:
                ok = False
                break
            a[name] = val
        if ok:
            rows.add(tuple(a[n] for n in names))
    return FiniteRelation(tuple(names), frozenset(rows))


def join(r1: FiniteRelation, r2: FiniteRelation) -> FiniteRelation:
    """Natural join: rows over both indexes agreeing on the shared variables."""
    common = [n for n in r1.index if n in r2.index]
    names = sorted(set(r1.index) | set(r2.index))
    p1 = [r1.index.index(n) for n in common]
    p2 = [r2.index.index(n) for n in common]
    buckets: dict[tuple, list[tuple]] = {}
    for r in r2.rows:
        buckets.setdefault(tuple(r[i] for i in p2), []).append(r)
    rows = set()
    for a in r1.rows:
        for b in buckets.get(tuple(a[i] for i in p1), ()):
            merged = dict(zip(r1.index, a))
            merged.update(zip(r2.index, b))
            rows.add(tuple(merged[n] for n in names))
    return FiniteRelation(tuple(names), frozenset(rows))


def full_relation(universes: Mapping[str, Sequence[Value]]) -> FiniteRelation:
    names = sorted(universes)
    return FiniteRelation(tuple(names), frozenset(itertools.product(*(universes[n] for n in names))))


# ---------------------------------------------------------------------------
# Exact reading of primitive constraints
# ---------------------------------------------------------------------------


def exact(x: float) -> Fraction | float:
    """The rational value of a finite float; infinities are returned as is."""
    return Fraction(x) if math.isfinite(x) else x


def interval_contains(a: Interval, q: Fraction) -> bool:
    if a.is_empty:
        return False
    return exact(a.lo) <= q <= exact(a.hi)


def holds(c: Primitive, p: Mapping[str, Fraction]) -> bool:
    """Exact truth of ``c`` at the rational point ``p``."""
    if isinstance(c, Sum):
        return p[c.x] + p[c.y] == p[c.z]
    if isinstance(c, Prod):
        return p[c.x] * p[c.y] == p[c.z]
    if isinstance(c, Inv):
        return p[c.x] * p[c.y] == 1
    if isinstance(c, Le):
        return p[c.x] <= p[c.y]
    if isinstance(c, Eq):
        return p[c.x] == p[c.y]
    if isinstance(c, In):
        return interval_contains(c.a, p[c.x])
    raise TypeError(f"not a primitive constraint: {c!r}")


@dataclass(frozen=True)
class FiniteConstraint:
    """A positional relation placed on variables."""

    rel: frozenset[tuple]
    vars: tuple[str, ...]


def primitive_relation(c: Primitive, universes: Mapping[str, Sequence[Value]]) -> FiniteConstraint:
    """The rows of the variables' universes on which ``c`` holds exactly."""
    vs = c.vars
    rows = set()
    for t in itertools.product(*(universes[v] for v in vs)):
        p: dict[str, Value] = {}
        ok = True
        for v, x in zip(vs, t):
            if v in p and p[v] != x:
                ok = False
                break
            p[v] = x
        if ok and holds(c, p):
            rows.add(t)
    return FiniteConstraint(frozenset(rows), tuple(vs))


Constraint = FiniteConstraint | Primitive


def _as_finite(c: Constraint, universes) -> FiniteConstraint:
    return c if isinstance(c, FiniteConstraint) else primitive_relation(c, universes)


def _holds_finite(c: FiniteConstraint, a: Mapping[str, Value]) -> bool:
    return tuple(a[v] for v in c.vars) in c.rel


class OracleBudgetExceeded(RuntimeError):
    pass


def brute_solutions(
    universes: Mapping[str, Sequence[Value]],
    constraints: Sequence[Constraint],
    budget: int = 10**7,
) -> FiniteRelation:
    """Every assignment over the universes that satisfies all constraints."""
    names = sorted(universes)
    size = math.prod(len(universes[n]) for n in names)
    if size > budget:
        raise OracleBudgetExceeded(f"{size} assignments exceed the budget of {budget}")
    fin = [_as_finite(c, universes) for c in constraints]
    rows = set()
    for t in itertools.product(*(universes[n] for n in names)):
        a = dict(zip(names, t))
        if all(_holds_finite(c, a) for c in fin):
            rows.add(t)
    return FiniteRelation(tuple(names), frozenset(rows))


def join_solutions(
    universes: Mapping[str, Sequence[Value]], constraints: Sequence[Constraint]
) -> FiniteRelation:
    """The solution set as the join of the constraint relations.

    Variables not mentioned by any constraint contribute their whole universe.
    """
    out = full_relation({n: universes[n] for n in universes if not any(n in c.vars for c in constraints)})
    for c in constraints:
        f = _as_finite(c, universes)
        out = join(out, relation_on(f.rel, f.vars))
    return out


# ---------------------------------------------------------------------------
# Rational sampling
# ---------------------------------------------------------------------------


def _plan(constraints: Sequence[Primitive], order: Sequence[str]):
    """Greedy triangular plan: a list of ('free', v) and ('solve', v, c) steps."""
    known: set[str] = set()
    steps: list[tuple] = []
    used: set[int] = set()
    pending = list(order)
    while len(known) < len(order):
        progress = False
        for i, c in enumerate(constraints):
            if i in used:
                continue
            unknown = [v for v in dict.fromkeys(c.vars) if v not in known]
            if len(unknown) != 1:
                continue
            v = unknown[0]
            if not _solvable(c, v):
                continue
            steps.append(("solve", v, c))
            known.add(v)
            used.add(i)
            progress = True
        if progress:
            continue
        v = next(x for x in pending if x not in known)
        steps.append(("free", v))
        known.add(v)
    leftover = [c for i, c in enumerate(constraints) if i not in used]
    return steps, leftover


def _solvable(c: Primitive, v: str) -> bool:
    if isinstance(c, In):
        return c.a.is_singleton
    if isinstance(c, Le):
        return False
    # a variable repeated inside the constraint cannot be isolated linearly
    return c.vars.count(v) == 1


def _solve(c: Primitive, v: str, p: Mapping[str, Fraction]) -> Fraction | None:
    if isinstance(c, In):
        return Fraction(c.a.lo)
    if isinstance(c, Eq):
        return p[c.y] if v == c.x else p[c.x]
    if isinstance(c, Sum):
        if v == c.z:
            return p[c.x] + p[c.y]
        return p[c.z] - (p[c.y] if v == c.x else p[c.x])
    if isinstance(c, Prod):
        if v == c.z:
            return p[c.x] * p[c.y]
        other = p[c.y] if v == c.x else p[c.x]
        return None if other == 0 else p[c.z] / other
    if isinstance(c, Inv):
        other = p[c.y] if v == c.x else p[c.x]
        return None if other == 0 else 1 / other
    raise TypeError(f"cannot solve {c}")


SAMPLE_BOUND = Fraction(10**6)


def _draw(rng: random.Random, lo: Fraction, hi: Fraction, hints: Sequence[Fraction]) -> Fraction:
    r = rng.random()
    if hints and r < 0.3:
        h = hints[rng.randrange(len(hints))]
        if lo <= h <= hi:
            return h
    if r < 0.45:
        # small integers and halves are likely roots of hand-written problems
        a, b = math.ceil(max(lo, -64) * 2), math.floor(min(hi, 64) * 2)
        if a <= b:
            return Fraction(rng.randint(a, b), 2)
    return lo + (hi - lo) * Fraction(rng.getrandbits(30), 2**30)


def _bounds(d: Interval | None) -> tuple[Fraction, Fraction]:
    lo, hi = -SAMPLE_BOUND, SAMPLE_BOUND
    if d is not None and not d.is_empty:
        if math.isfinite(d.lo):
            lo = Fraction(d.lo)
        if math.isfinite(d.hi):
            hi = Fraction(d.hi)
        if lo > hi:
            # beyond the sampling window: use the finite endpoint
            lo = hi = Fraction(d.lo) if math.isfinite(d.lo) else Fraction(d.hi)
    return lo, hi


@dataclass
class SampleReport:
    samples: int
    satisfying: int
    violations: int
    witnesses: list[dict[str, Fraction]]


class Cover:
    """A union of boxes with exact endpoints, bucketed on one coordinate for lookup."""

    BUCKETS = 512

    def __init__(self, boxes: Iterable[Mapping[str, Interval]]):
        self.boxes = [
            {v: (exact(d.lo), exact(d.hi)) for v, d in b.items()}
            for b in boxes
            if not any(d.is_empty for d in b.values())
        ]
        shared = set.intersection(*(set(b) for b in self.boxes)) if self.boxes else set()
        self.key = min(shared, key=lambda v: -len({b[v][0] for b in self.boxes}), default=None)
        self.buckets: list[list[dict]] = [self.boxes]
        if self.key is None or len(self.boxes) < 32:
            return
        ends = [float(e) for b in self.boxes for e in b[self.key] if math.isfinite(e)]
        if not ends:
            return
        self.lo, hi = min(ends), max(ends)
        self.step = (hi - self.lo) / self.BUCKETS or 1.0
        self.buckets = [[] for _ in range(self.BUCKETS)]
        for b in self.boxes:
            lo, hi = b[self.key]
            for i in range(self._slot(float(lo)), self._slot(float(hi)) + 1):
                self.buckets[i].append(b)

    def _slot(self, x: float) -> int:
        i = math.floor((x - self.lo) / self.step) if math.isfinite(x) else (-1 if x < 0 else self.BUCKETS)
        return min(max(i, 0), self.BUCKETS - 1)

    def __contains__(self, point: Mapping[str, Fraction]) -> bool:
        cands = self.buckets[0] if len(self.buckets) == 1 else self.buckets[self._slot(float(point[self.key]))]
        return any(all(lo <= point[v] <= hi for v, (lo, hi) in b.items()) for b in cands)


def covered(point: Mapping[str, Fraction], cover: Iterable[Mapping[str, Interval]]) -> bool:
    if not isinstance(cover, Cover):
        cover = Cover(cover)
    return point in cover


def sample_report(
    constraints: Sequence[Primitive],
    init: Mapping[str, Interval],
    cover: Sequence[Mapping[str, Interval]],
    n: int = 10_000,
    seed: int = 0,
    known: Iterable[Mapping[str, Fraction]] = (),
    keep: int = 10,
) -> SampleReport:
    """Draw rational points, keep the exact solutions inside ``init``, check coverage.

    Free variables are sampled and the rest computed exactly from the
    equalities, so that solutions on lower-dimensional sets are hit.  The
    plan that leaves fewest equalities unused is taken; forward and reverse
    variable orders are tried.  Points in ``known`` are checked as well.
    """
    rng = random.Random(seed)
    names = list(init)
    for c in constraints:
        for v in c.vars:
            if v not in init:
                names.append(v)
    names = list(dict.fromkeys(names))
    plans = [_plan(constraints, order) for order in (names, names[::-1])]
    score = [sum(not isinstance(c, (Le, In)) for c in left) for _, left in plans]
    best = min(score)
    plans = [p for p, s in zip(plans, score) if s == best]
    hints = sorted(
        {Fraction(b[v].lo) for b in cover for v in b if math.isfinite(b[v].lo)}
        | {Fraction(b[v].hi) for b in cover for v in b if math.isfinite(b[v].hi)}
    )
    index = Cover(cover)
    sat = viol = 0
    wit: list[dict[str, Fraction]] = []

    def check(p: Mapping[str, Fraction]) -> None:
        nonlocal sat, viol
        if not all(interval_contains(init[v], p[v]) for v in init if v in p):
            return
        if not all(holds(c, p) for c in constraints):
            return
        sat += 1
        if p not in index:
            viol += 1
            if len(wit) < keep:
                wit.append(dict(p))

    for p in known:
        check(p)
    for i in range(n):
        steps, _ = plans[i % len(plans)]
        p: dict[str, Fraction] = {}
        ok = True
        for st in steps:
            if st[0] == "free":
                lo, hi = _bounds(init.get(st[1]))
                p[st[1]] = _draw(rng, lo, hi, hints)
            else:
                val = _solve(st[2], st[1], p)
                if val is None:
                    ok = False
                    break
                p[st[1]] = val
        if ok:
            check(p)
    return SampleReport(n, sat, viol, wit)


def sample_check(
    csp,
    init: Mapping[str, Interval],
    cover: Sequence[Mapping[str, Interval]],
    n: int = 10_000,
    seed: int = 0,
    known: Iterable[Mapping[str, Fraction]] = (),
) -> int:
    """Number of exact solutions found in ``init`` that no box of ``cover`` contains."""
    constraints = csp.constraints if hasattr(csp, "constraints") else list(csp)
    return sample_report(constraints, init, cover, n, seed, known).violations


# ---------------------------------------------------------------------------
# Random problems
# ---------------------------------------------------------------------------


def random_csp(
    rng: random.Random,
    n_vars: int = 4,
    n_constraints: int = 3,
    bound: float = 10.0,
    kinds: Sequence[Callable] = (Sum, Prod, Inv, Le, Eq, In),
):
    """A random CSP over ``x0..x{n-1}`` and an initial box of width ``2*bound``."""
    from .csp import Box, Csp

    names = [f"x{i}" for i in range(n_vars)]
    cs: list[Primitive] = []
    for _ in range(n_constraints):
        k = rng.choice(kinds)
        if k in (Sum, Prod):
            cs.append(k(*rng.sample(names, 3)) if n_vars >= 3 else k(*(rng.choice(names) for _ in range(3))))
        elif k in (Inv, Le, Eq):
            cs.append(k(*rng.sample(names, 2)))
        else:
            a = rng.uniform(-bound, bound)
            b = a + rng.uniform(0, bound)
            cs.append(In(rng.choice(names), Interval(a, b)))
    init = Box({n: Interval(-bound, bound) for n in names})
    return Csp.of(cs, names), init


__all__ = [
    "FiniteConstraint",
    "FiniteRelation",
    "OracleBudgetExceeded",
    "SampleReport",
    "brute_solutions",
    "Cover",
    "covered",
    "exact",
    "full_relation",
    "holds",
    "join",
    "join_solutions",
    "primitive_relation",
    "random_csp",
    "relation_on",
    "sample_check",
    "sample_report",
]
