"""Constraint propagation and branch-and-prune enumeration over float intervals."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

from . import interval as iv
from .dro import IDEMPOTENT, Eq, In, Inv, Le, Primitive, Prod, Sum, reduce
from .interval import EMPTY, FULL, Interval

__all__ = [
    "Box",
    "BoxBudgetExceeded",
    "Csp",
    "EMPTY_BOX",
    "certainly_inside",
    "consolidate",
    "enumerate_boxes",
    "narrow",
    "propagate",
]


class Box(Mapping[str, Interval]):
    """An immutable assignment of one interval per variable.

    A box with any empty component is the canonical :data:`EMPTY_BOX`.
    """

    __slots__ = ("_d",)

    def __new__(cls, domains: Mapping[str, Interval] | Iterable = ()):
        d = dict(domains)
        if any(v is EMPTY for v in d.values()):
            return EMPTY_BOX
        self = object.__new__(cls)
        self._d = d
        return self

    @classmethod
    def _wrap(cls, d: dict[str, Interval]) -> Box:
        self = object.__new__(cls)
        self._d = d
        return self

    @property
    def is_empty(self) -> bool:
        return self._d is None

    def __getitem__(self, k: str) -> Interval:
        if self._d is None:
            raise KeyError(k)
        return self._d[k]

    def __iter__(self) -> Iterator[str]:
        return iter(self._d or ())

    def __len__(self) -> int:
        return len(self._d or ())

    def __eq__(self, other) -> bool:
        if isinstance(other, Box):
            return self._d == other._d
        return NotImplemented

    def __hash__(self):
        if self._d is None:
            return hash(None)
        return hash(frozenset(self._d.items()))

    def __repr__(self) -> str:
        if self._d is None:
            return "EMPTY_BOX"
        inner = ", ".join(f"{k}: {v}" for k, v in self._d.items())
        return "Box({" + inner + "})"

    def update(self, changes: Mapping[str, Interval]) -> Box:
        if self._d is None:
            return self
        d = dict(self._d)
        for k, v in changes.items():
            if v is EMPTY:
                return EMPTY_BOX
            d[k] = v
        return Box._wrap(d)

    def extend(self, names: Iterable[str], dom: Interval = FULL) -> Box:
        """Add unseen variables with domain ``dom``."""
        if self._d is None:
            return self
        new = [n for n in names if n not in self._d]
        if not new:
            return self
        d = dict(self._d)
        for n in new:
            d[n] = dom
        return Box._wrap(d)

    def project(self, names: Iterable[str]) -> Box:
        if self._d is None:
            return self
        return Box._wrap({n: self._d[n] for n in names})

    def subset(self, other: Box) -> bool:
        """Componentwise inclusion; the empty box is below everything."""
        if self._d is None:
            return True
        if other.is_empty:
            return False
        return all(self._d[k].subset(v) for k, v in other.items() if k in self._d)

    def contains_point(self, point: Mapping[str, object]) -> bool:
        if self._d is None:
            return False
        return all(point[k] in d for k, d in self._d.items())


EMPTY_BOX = object.__new__(Box)
EMPTY_BOX._d = None


@dataclass(frozen=True)
class Csp:
    """Variables in a fixed order and a deduplicated tuple of constraints."""

    vars: tuple[str, ...]
    constraints: tuple[Primitive, ...] = field(default=())

    def __post_init__(self):
        seen = dict.fromkeys(self.constraints)
        object.__setattr__(self, "constraints", tuple(seen))
        object.__setattr__(self, "vars", tuple(dict.fromkeys(self.vars)))
        known = set(self.vars)
        for c in self.constraints:
            for v in c.vars:
                if v not in known:
                    raise ValueError(f"constraint {c} mentions unknown variable {v!r}")

    @classmethod
    def of(cls, constraints: Iterable[Primitive], vars: Sequence[str] = ()) -> Csp:
        """Build a CSP whose variables are ``vars`` followed by any others in order of use."""
        cs = tuple(constraints)
        names = list(vars)
        for c in cs:
            names.extend(c.vars)
        return cls(tuple(names), cs)

    def index(self) -> dict[str, list[Primitive]]:
        idx: dict[str, list[Primitive]] = {v: [] for v in self.vars}
        for c in self.constraints:
            for v in dict.fromkeys(c.vars):
                idx[v].append(c)
        return idx


class BoxBudgetExceeded(RuntimeError):
    """Enumeration produced more boxes than allowed; ``partial`` holds those found."""

    def __init__(self, limit: int, partial: list[Box]):
        super().__init__(f"more than {limit} boxes")
        self.limit = limit
        self.partial = partial


def _significant(old: Interval, new: Interval, tau: float) -> bool:
    if tau <= 0.0 or not old.is_bounded:
        return True
    return (old.width - new.width) > tau * old.width


def propagate(
    csp: Csp,
    init: Mapping[str, Interval],
    *,
    tau: float = 0.0,
    seed: Iterable[Primitive] | None = None,
    index: Mapping[str, list[Primitive]] | None = None,
    max_steps: int = 200_000,
) -> Box:
    """Narrow ``init`` to a common fixed point of all constraint operators.

    A worklist re-queues every constraint on a variable whose domain
    shrank.  ``seed`` restricts the initial worklist, which is only correct
    when ``init`` is already a fixed point of the other constraints.  With
    ``tau > 0`` a shrink of less than that fraction of the width does not
    re-queue neighbours.  After ``max_steps`` operator applications the
    current (still sound) box is returned.
    """
    if isinstance(init, Box) and init.is_empty:
        return EMPTY_BOX
    doms = dict(init)
    for v in csp.vars:
        if v not in doms:
            raise KeyError(f"variable {v!r} has no domain in the initial box")
    idx = index if index is not None else csp.index()
    ok = narrow(doms, csp.constraints if seed is None else seed, idx, tau=tau, max_steps=max_steps)
    return Box._wrap(doms) if ok else EMPTY_BOX


def narrow(
    doms: dict[str, Interval],
    seed: Iterable[Primitive],
    index: Mapping[str, Sequence[Primitive]],
    *,
    tau: float = 0.0,
    max_steps: int = 200_000,
) -> bool:
    """The worklist loop behind :func:`propagate`, updating ``doms`` in place.

    Returns ``False`` when some domain becomes empty.
    """
    queue = deque(dict.fromkeys(seed))
    queued = set(queue)
    steps = 0
    while queue:
        c = queue.popleft()
        queued.discard(c)
        red = reduce(c, doms)
        if red is None:
            return False
        steps += 1
        for v, d in red.items():
            old = doms[v]
            if d == old:
                continue
            doms[v] = d
            if not _significant(old, d, tau):
                continue
            for k in index.get(v, ()):
                if k is c and isinstance(c, IDEMPOTENT):
                    continue
                if k not in queued:
                    queued.add(k)
                    queue.append(k)
        if steps >= max_steps:
            break
    return True


# ---------------------------------------------------------------------------
# Inner-box test
# ---------------------------------------------------------------------------


def _defining(c: Primitive) -> bool:
    if isinstance(c, In):
        return c.a.is_singleton
    return not isinstance(c, Le)


def _solve_for(c: Primitive, v: str, f: Mapping[str, Interval]) -> Interval:
    """Enclosure of ``v`` as a function of the other (determined) variables of ``c``."""
    if isinstance(c, Eq):
        return f[c.y if v == c.x else c.x]
    if isinstance(c, In):
        return c.a
    if isinstance(c, Sum):
        if v == c.z:
            return iv.add(f[c.x], f[c.y])
        other = c.y if v == c.x else c.x
        return iv.sub(f[c.z], f[other])
    if isinstance(c, Prod):
        if v == c.z:
            return iv.mul(f[c.x], f[c.y])
        other = c.y if v == c.x else c.x
        d = f[other]
        if 0.0 in d:
            return EMPTY
        return iv.div(f[c.z], d)[0]
    if isinstance(c, Inv):
        d = f[c.y if v == c.x else c.x]
        if 0.0 in d:
            return EMPTY
        return iv.div(iv.ONE, d)[0]
    raise TypeError(c)


def _inner_with_order(csp: Csp, box: Box, outer: Mapping[str, Interval], order) -> bool:
    f: dict[str, Interval] = {}
    pending = [c for c in csp.constraints if _defining(c)]
    while pending:
        progress = False
        rest = []
        for c in pending:
            undet = [v for v in dict.fromkeys(c.vars) if v not in f]
            if not undet:
                return False
            if len(undet) == 1 and c.vars.count(undet[0]) == 1:
                v = undet[0]
                val = _solve_for(c, v, f)
                if val is EMPTY or (v in outer and not val.subset(outer[v])):
                    return False
                f[v] = val
                progress = True
            else:
                rest.append(c)
        pending = rest
        if pending and not progress:
            live = {v for c in pending for v in c.vars}
            free = next(v for v in order if v in live and v not in f)
            f[free] = box[free]
    for c in csp.constraints:
        if _defining(c):
            continue
        if isinstance(c, In):
            if not f.get(c.x, box[c.x]).subset(c.a):
                return False
        else:
            if not f.get(c.x, box[c.x]).hi <= f.get(c.y, box[c.y]).lo:
                return False
    return True


def certainly_inside(csp: Csp, box: Box, outer: Mapping[str, Interval] | None = None) -> bool:
    """Whether every point of the box's free coordinates extends to a solution.

    Equality constraints are used, one each, to express a variable as a
    function of already-determined ones; variables that cannot be reached
    this way are taken as free.  The box passes when each derived enclosure
    stays within ``outer`` (where witnesses may lie; missing variables are
    unrestricted) and every inequality holds on the enclosures.  Failing
    this test proves nothing.
    """
    if box.is_empty:
        return False
    outer = box if outer is None else outer
    order = [v for v in csp.vars if v in box]
    for candidate in (order, order[::-1]):
        if _inner_with_order(csp, box, outer, candidate):
            return True
    return False


# ---------------------------------------------------------------------------
# Enumeration
# ---------------------------------------------------------------------------


def _pick_split(box: Box, order: Sequence[str], eps: float) -> str | None:
    best, best_w = None, -1.0
    for v in order:
        d = box[v]
        if d.lo == d.hi:
            continue
        w = d.width
        if w <= eps or w <= best_w:
            continue
        if not iv.splittable(d):
            continue
        best, best_w = v, w
    return best


def enumerate_boxes(
    csp: Csp,
    init: Mapping[str, Interval],
    eps_split: float,
    max_boxes: int = 4096,
    *,
    tau: float = 0.0,
    inner: bool = True,
    domain: Mapping[str, Interval] | None = None,
) -> list[Box]:
    """Split and propagate until every box is small, or provably all solutions.

    Depth-first, left half first.  A box is a leaf when no domain is wider
    than ``eps_split`` (unbounded domains always count as wide) or, with
    ``inner`` on, when :func:`certainly_inside` holds with respect to
    ``domain`` (default ``init``), the region the witnesses must lie in.
    The union of the returned boxes contains every solution inside
    ``init``; an empty list proves there are none.
    """
    if eps_split <= 0:
        raise ValueError("eps_split must be positive")
    idx = csp.index()
    order = list(csp.vars) + [v for v in init if v not in set(csp.vars)]
    start = Box(init) if not isinstance(init, Box) else init
    root = propagate(csp, start, tau=tau, index=idx)
    if root.is_empty:
        return []
    outer = start if domain is None else domain
    out: list[Box] = []
    stack: list[Box] = [root]
    while stack:
        box = stack.pop()
        v = _pick_split(box, order, eps_split)
        if v is None or (inner and certainly_inside(csp, box, outer)):
            out.append(box)
            if len(out) > max_boxes:
                raise BoxBudgetExceeded(max_boxes, out)
            continue
        lo, hi = iv.split(box[v])
        children = []
        for half in (lo, hi):
            child = box.update({v: half})
            res = propagate(csp, child, tau=tau, seed=idx.get(v, ()), index=idx)
            if not res.is_empty:
                children.append(res)
        stack.extend(reversed(children))
    return out


def consolidate(boxes: Sequence[Box]) -> list[Box]:
    """Merge boxes that agree everywhere except one adjacent coordinate.

    Repeats until nothing merges; the covered point set is unchanged.
    """
    items = [b for b in boxes if not b.is_empty]
    if not items:
        return []
    names = tuple(items[0])
    for b in items[1:]:
        if set(b) != set(names):
            raise ValueError("consolidate needs boxes over the same variables")
    # (first position, box) so the output keeps the order of first appearance
    live: list[tuple[int, Box]] = list(enumerate(items))
    changed = True
    while changed:
        changed = False
        for k in names:
            others = [n for n in names if n != k]
            buckets: dict[tuple, list[tuple[int, Box]]] = {}
            for pos, b in live:
                buckets.setdefault(tuple(b[n] for n in others), []).append((pos, b))
            merged: list[tuple[int, Box]] = []
            for group in buckets.values():
                if len(group) == 1:
                    merged.extend(group)
                    continue
                group.sort(key=lambda pb: (pb[1][k].lo, pb[1][k].hi))
                cur_pos, cur = group[0]
                for pos, b in group[1:]:
                    if iv.adjacent(cur[k], b[k]):
                        cur = cur.update({k: iv.hull(cur[k], b[k])})
                        cur_pos = min(cur_pos, pos)
                        changed = True
                    else:
                        merged.append((cur_pos, cur))
                        cur_pos, cur = pos, b
                merged.append((cur_pos, cur))
            live = sorted(merged, key=lambda pb: pb[0])
    out: list[Box] = []
    seen = set()
    for _, b in live:
        if b not in seen:
            seen.add(b)
            out.append(b)
    return out
