"""The constraint logic programming engine.

A state is a goal list, an active box (one interval per numeric variable),
the passive primitive constraints, and the Herbrand bindings.  Program
atoms are resolved against clauses in textual order; constraint atoms are
flattened into the passive store and the active box is narrowed by
propagation straight away, so inconsistent branches die early.  When the
goal list is empty the remaining CSP is enumerated into the answer boxes.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Callable, Iterator, Mapping, Sequence

from . import decompose as dc
from .csp import Box, BoxBudgetExceeded, Csp, consolidate, enumerate_boxes, narrow
from .dro import In, Primitive
from .interval import FULL
from .logic import (
    Clause,
    Compound,
    NumLit,
    Term,
    Var,
    apply,
    display_name,
    list_items,
    make_list,
    pair,
    rename_apart,
    rename_term,
    term_vars,
    unify_into,
    walk,
)
from .parser import Query, SourceProgram, braket_interval, format_goal, format_term, is_constraint, to_numconstraint


class InstantiationError(RuntimeError):
    """A builtin needed a ground argument and got a variable."""


class ClpTypeError(TypeError):
    """A term of the wrong sort reached a builtin or a constraint."""


@dataclass(frozen=True)
class Options:
    eps_split: float = 1e-6
    tau: float = 0.0
    max_answers: int = 10
    max_boxes: int = 4096
    depth: int = 64
    consolidate: bool = True
    trace: Callable[[str], None] | None = None
    # run validate_state after every transition
    check: bool = False
    # wall-clock seconds for the whole search; None means no limit
    time_limit: float | None = None

    def __post_init__(self):
        if not self.eps_split > 0:
            raise ValueError("eps_split must be positive")
        if self.tau < 0:
            raise ValueError("tau must be non-negative")
        for name in ("max_answers", "max_boxes", "depth"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.time_limit is not None and not self.time_limit > 0:
            raise ValueError("time_limit must be positive")


@dataclass(frozen=True)
class Post:
    """Goal item carrying primitives produced by unification."""

    constraints: tuple[Primitive, ...]


GoalItem = Term | Post


@dataclass(frozen=True)
class State:
    goal: tuple[GoalItem, ...]
    active: Box
    passive: tuple[Primitive, ...] = ()
    bindings: Mapping[str, Term] = field(default_factory=dict)
    numeric: frozenset[str] = frozenset()
    counter: int = 0
    depth: int = 0
    # variable -> constraints of passive that mention it
    index: Mapping[str, tuple[Primitive, ...]] = field(default_factory=dict)


@dataclass
class Answer:
    bindings: dict[str, Term]
    boxes: list[Box]
    variables: tuple[str, ...]
    passive: tuple[Primitive, ...] = ()
    # the store the boxes were enumerated from, under internal names
    active: Box | None = None
    # internal variable name -> name used in bindings and boxes
    names: dict[str, str] = field(default_factory=dict)

    def internal_boxes(self) -> list[Box]:
        """The answer boxes keyed by internal variable names."""
        back = {shown: name for name, shown in self.names.items()}
        return [Box._wrap({back[k]: b[k] for k in b}) for b in self.boxes]

    def format(self, digits: int = 17) -> list[str]:
        """Binding lines followed by one bra-ket line per variable and box."""
        from .interval import format_outward

        lines = [f"{k} = {format_term(v)}" for k, v in self.bindings.items()]
        for i, b in enumerate(self.boxes):
            if len(self.boxes) > 1:
                lines.append(f"% box {i + 1} of {len(self.boxes)}")
            kets = []
            for v in self.variables:
                lo, hi = format_outward(b[v], digits)[1:-1].split(",")
                kets.append(f"<{lo}|{display_name(v)}|{hi}>")
            if kets:
                lines.append(", ".join(kets))
        return lines


@dataclass
class SolveStats:
    resolutions: int = 0
    transfers: int = 0
    failures: int = 0
    derivations: int = 0
    answers: int = 0
    depth_cutoffs: int = 0
    box_overflows: int = 0
    timed_out: bool = False

    @property
    def budget_hit(self) -> bool:
        return self.depth_cutoffs > 0 or self.box_overflows > 0 or self.timed_out


class Program:
    """Clauses grouped by predicate, in source order, plus the inventory."""

    def __init__(self, source: SourceProgram | Sequence[Clause], inventory: Mapping[str, int] | None = None):
        if isinstance(source, SourceProgram):
            clauses, inventory = list(source.clauses), source.inventory
        else:
            clauses = list(source)
        self.clauses = clauses
        self.inventory = dict(inventory) if inventory is not None else None
        self.by_key: dict[tuple[str, int], list[tuple[Clause, frozenset[str]]]] = {}
        for c in clauses:
            self.by_key.setdefault(c.head.key, []).append((c, c.numeric_vars()))

    def candidates(self, key: tuple[str, int]) -> list[tuple[Clause, frozenset[str]]]:
        return self.by_key.get(key, [])


BUILTINS = {("merge", 3)}


# ---------------------------------------------------------------------------
# Constraint store
# ---------------------------------------------------------------------------


def check_consistent(state: State) -> bool:
    return not state.active.is_empty


def add_constraints(state: State, prims: Sequence[Primitive], opts: Options = Options()) -> State | None:
    """Add primitives to the passive store and re-narrow the active box."""
    if not prims:
        return state
    doms = dict(state.active)
    index = dict(state.index)
    for c in prims:
        for v in dict.fromkeys(c.vars):
            if v not in doms:
                doms[v] = FULL
            index[v] = index.get(v, ()) + (c,)
    if not narrow(doms, prims, index, tau=opts.tau):
        return None
    return replace(
        state,
        active=Box._wrap(doms),
        passive=state.passive + tuple(prims),
        index=index,
    )


def atom_primitives(t: Compound, fresh: dc.FreshNames) -> list[Primitive]:
    """Flatten a substituted constraint atom into primitives."""
    if t.key == ("in", 3):
        x = t.args[0]
        if isinstance(x, Var):
            return [In(x.name, braket_interval(t))]
        out: list[Primitive] = []
        e = _arith(x)
        lo, hi = t.args[1].text, t.args[2].text
        if lo != "-inf":
            out += dc.flatten(dc.NumConstraint(dc.Const(lo), "=<", e), fresh).constraints
        if hi not in ("inf", "+inf"):
            out += dc.flatten(dc.NumConstraint(e, "=<", dc.Const(hi)), fresh).constraints
        return out
    try:
        nc = to_numconstraint(t)
    except TypeError as e:
        raise ClpTypeError(str(e)) from None
    return dc.flatten(nc, fresh).constraints


def _arith(t: Term) -> dc.ArithExpr:
    from .parser import to_arith

    try:
        return to_arith(t)
    except TypeError as e:
        raise ClpTypeError(str(e)) from None


def _trace(opts: Options, msg: str) -> None:
    if opts.trace is not None:
        opts.trace(msg)


def transfer_and_infer(state: State, opts: Options = Options()) -> State | None:
    """Move the leading constraint atom into the store and propagate."""
    item, rest = state.goal[0], state.goal[1:]
    if isinstance(item, Post):
        prims = list(item.constraints)
        counter = state.counter
        label = ", ".join(str(c) for c in prims)
    else:
        t = apply(item, state.bindings)
        fresh = dc.FreshNames("$", state.counter)
        prims = atom_primitives(t, fresh)
        counter = fresh.counter
        label = format_goal(t)
    _trace(opts, f"c {label}")
    base = replace(state, goal=rest, counter=counter, numeric=state.numeric | _prim_vars(prims))
    new = add_constraints(base, prims, opts)
    _trace(opts, "i " + ("empty" if new is None else f"{len(new.active)} domains"))
    _trace(opts, "s " + ("fail" if new is None else "pass"))
    return new


def _prim_vars(prims: Sequence[Primitive]) -> frozenset[str]:
    return frozenset(v for c in prims for v in c.vars)


# ---------------------------------------------------------------------------
# Resolution
# ---------------------------------------------------------------------------


def resolve(state: State, clause: Clause, numeric: frozenset[str] | None = None) -> State | None:
    """Resolve the leading program atom against ``clause``; ``None`` on failure.

    Constraints emitted by unification come first in the new goal, then the
    clause guard, then its body.  ``numeric`` is the clause's numeric
    variables before renaming.
    """
    atom_, rest = state.goal[0], state.goal[1:]
    step = state.counter + 1
    renamed = rename_apart(clause, step)
    num = clause.numeric_vars() if numeric is None else numeric
    numeric_all = state.numeric | frozenset(f"{v.split('#', 1)[0]}#{step}" for v in num)
    res = unify_into(atom_, renamed.head, state.bindings, numeric_all)
    if res is None:
        return None
    bindings, emitted = res
    pre: tuple[GoalItem, ...] = (Post(tuple(emitted)),) if emitted else ()
    return replace(
        state,
        goal=pre + renamed.guard + renamed.body + rest,
        bindings=bindings,
        numeric=numeric_all,
        counter=step,
        depth=state.depth + 1,
    )


def _quantity(t: Term) -> int:
    if not isinstance(t, NumLit):
        raise ClpTypeError(f"parts list quantity must be a number, got {format_term(t)}")
    q = t.value
    if q != q.to_integral_value() or q < 0:
        raise ClpTypeError(f"parts list quantity must be a natural number, got {t.text}")
    return int(q)


def _parts(t: Term) -> dict[str, int]:
    if term_vars(t):
        raise InstantiationError(f"merge needs ground parts lists, got {format_term(t)}")
    items = list_items(t)
    if items is None:
        raise ClpTypeError(f"not a parts list: {format_term(t)}")
    out: dict[str, int] = {}
    for it in items:
        if not (isinstance(it, Compound) and it.functor == ":" and len(it.args) == 2):
            raise ClpTypeError(f"parts list items are part:quantity, got {format_term(it)}")
        part = it.args[0]
        if not (isinstance(part, Compound) and not part.args):
            raise ClpTypeError(f"part name must be an atom, got {format_term(part)}")
        out[part.functor] = out.get(part.functor, 0) + _quantity(it.args[1])
    return out


def merge_builtin(pl1: Term, pl2: Term, inventory: Mapping[str, int] | None) -> Term | None:
    """Quantity-summed parts list in ascending part order, or ``None`` when over stock.

    Parts absent from a declared inventory have stock zero; with no
    inventory at all, stock is unlimited.
    """
    a, b = _parts(pl1), _parts(pl2)
    total = dict(a)
    for k, v in b.items():
        total[k] = total.get(k, 0) + v
    if inventory is not None:
        for k, v in total.items():
            if v > inventory.get(k, 0):
                return None
    return make_list(pair(Compound(k), NumLit(str(total[k]))) for k in sorted(total))


def _call_builtin(state: State, atom_: Compound, program: Program) -> State | None:
    pl1, pl2, pl = (apply(x, state.bindings) for x in atom_.args)
    merged = merge_builtin(pl1, pl2, program.inventory)
    if merged is None:
        return None
    res = unify_into(pl, merged, state.bindings, state.numeric)
    if res is None:
        return None
    bindings, emitted = res
    pre: tuple[GoalItem, ...] = (Post(tuple(emitted)),) if emitted else ()
    return replace(state, goal=pre + state.goal[1:], bindings=bindings)


def validate_state(state: State) -> None:
    """Raise ``AssertionError`` if the state breaks a store invariant."""
    assert not state.active.is_empty, "live state with an empty box"
    for c in state.passive:
        for v in c.vars:
            assert v in state.active, f"{v} of {c} has no active domain"
    for k, t in state.bindings.items():
        assert k not in state.numeric, f"numeric variable {k} is bound"
        assert k not in term_vars(apply(t, state.bindings)), f"cyclic binding for {k}"


def successors(state: State, program: Program, opts: Options, stats: SolveStats) -> list[State]:
    """States reachable in one transition, in clause order."""
    item = state.goal[0]
    if isinstance(item, Post) or is_constraint(item):
        stats.transfers += 1
        new = transfer_and_infer(state, opts)
        return [] if new is None else [new]
    atom_ = walk(item, state.bindings)
    if not isinstance(atom_, Compound):
        raise ClpTypeError(f"goal is not a callable term: {format_term(atom_)}")
    if atom_.key in BUILTINS:
        new = _call_builtin(state, atom_, program)
        _trace(opts, f"r {format_term(apply(atom_, state.bindings))} " + ("ok" if new else "fail"))
        return [] if new is None else [new]
    out = []
    for i, (clause, numeric) in enumerate(program.candidates(atom_.key)):
        if state.depth >= opts.depth:
            stats.depth_cutoffs += 1
            _trace(opts, f"r {atom_.functor}/{len(atom_.args)} depth limit {opts.depth} reached")
            break
        new = resolve(state, clause, numeric)
        stats.resolutions += 1
        _trace(opts, f"r {atom_.functor}/{len(atom_.args)} clause {i + 1} " + ("ok" if new else "fail"))
        if new is not None:
            out.append(new)
    return out


def initial_state(query: Query) -> State:
    st = State(goal=query.guard + query.body, active=Box({}), numeric=query.numeric_vars())
    return st


def _answer_vars(state: State, query: Query) -> tuple[dict[str, str], dict[str, Term]]:
    """Numeric variables to report (internal name -> shown name) and bindings.

    A query variable bound straight to a numeric variable is reported as
    that variable rather than as a binding.
    """
    names: dict[str, str] = {}
    resolved = {v: apply(Var(v), state.bindings) for v in query.variables()}
    for v, t in resolved.items():
        if v in state.active:
            names.setdefault(v, v)
        elif isinstance(t, Var) and t.name in state.active and t.name not in names:
            names[t.name] = v
    bindings: dict[str, Term] = {}
    for v, t in resolved.items():
        if t == Var(v) or (isinstance(t, Var) and names.get(t.name) == v):
            continue
        for w in term_vars(t):
            if w in state.active:
                names.setdefault(w, w)
        bindings[v] = rename_term(t, names)
    return names, bindings


def solve(
    program: Program | SourceProgram,
    query: Query,
    opts: Options = Options(),
    stats: SolveStats | None = None,
) -> Iterator[Answer]:
    """Answers in depth-first, clause-order derivation order.

    Depth cut-offs and box budget overflows are counted in ``stats``; they
    end the affected derivation only.  The time limit ends the whole search.
    """
    if not isinstance(program, Program):
        program = Program(program)
    stats = stats if stats is not None else SolveStats()
    deadline = None if opts.time_limit is None else time.monotonic() + opts.time_limit
    stack = [initial_state(query)]
    while stack:
        if deadline is not None and time.monotonic() > deadline:
            stats.timed_out = True
            _trace(opts, f"s time limit {opts.time_limit}s reached")
            return
        st = stack.pop()
        if st.goal:
            succ = successors(st, program, opts, stats)
            if not succ:
                stats.failures += 1
            if opts.check:
                for s in succ:
                    validate_state(s)
            stack.extend(reversed(succ))
            continue
        stats.derivations += 1
        answer = _leaf(st, query, opts, stats)
        if answer is None:
            continue
        stats.answers += 1
        yield answer
        if stats.answers >= opts.max_answers:
            return


def _leaf(st: State, query: Query, opts: Options, stats: SolveStats) -> Answer | None:
    names, bindings = _answer_vars(st, query)
    csp = Csp(tuple(st.active), st.passive)
    try:
        boxes = enumerate_boxes(
            csp, st.active, opts.eps_split, opts.max_boxes, tau=opts.tau, domain={}
        )
    except BoxBudgetExceeded:
        stats.box_overflows += 1
        _trace(opts, f"s box budget {opts.max_boxes} exceeded")
        return None
    if not boxes:
        stats.failures += 1
        _trace(opts, "s enumeration found no boxes")
        return None
    proj = [Box._wrap({names[k]: b[k] for k in names}) for b in boxes]
    proj = consolidate(proj) if opts.consolidate else list(dict.fromkeys(proj))
    return Answer(bindings, proj, tuple(names.values()), st.passive, st.active, names)


__all__ = [
    "Answer",
    "ClpTypeError",
    "InstantiationError",
    "Options",
    "Post",
    "Program",
    "SolveStats",
    "State",
    "add_constraints",
    "atom_primitives",
    "check_consistent",
    "initial_state",
    "merge_builtin",
    "resolve",
    "solve",
    "successors",
    "transfer_and_infer",
    "validate_state",
]
