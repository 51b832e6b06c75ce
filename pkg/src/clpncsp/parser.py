"""Tokenizer, recursive-descent parser and printer for ``.ncsp`` programs.

A clause is ``head :- guard ; body.`` where the guard lists constraint
atoms and the body lists program atoms.  Constraint atoms are bra-kets
``<lo|X|hi>``, ``sum/3``, ``prod/3``, ``inv/2`` and infix relations
``=``, ``=<`` (also ``<=``) and ``>=`` over ``+ - * /``.

Inside the parsed terms a bra-ket is ``in(X, lo, hi)`` and an infix
relation is a compound named after its operator, so constraint atoms can
be renamed and substituted like any other term.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from . import decompose as dc
from .interval import Interval, parse_decimal_outward
from .logic import Clause, Compound, NumLit, Term, Var

CONSTRAINT_KEYS = {("in", 3), ("sum", 3), ("prod", 3), ("inv", 2), ("=", 2), ("=<", 2), (">=", 2)}
ARITH_OPS = {"+", "-", "*", "/"}
INF_WORDS = {"inf", "+inf", "-inf"}


class ParseError(ValueError):
    def __init__(self, msg: str, line: int, col: int, token: str = ""):
        where = f"line {line}, column {col}"
        detail = f" near {token!r}" if token else ""
        super().__init__(f"{where}: {msg}{detail}")
        self.msg = msg
        self.line = line
        self.col = col
        self.token = token


@dataclass(frozen=True)
class Token:
    kind: str  # var, name, num, punct, end, eof
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|%[^\n]*)
  | (?P<num>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<var>[A-Z_][A-Za-z0-9_]*)
  | (?P<name>[a-z][A-Za-z0-9_]*)
  | (?P<punct>:-|=<|<=|>=|[()\[\],;|<>:=+\-*/.])
    """,
    re.VERBOSE,
)


def tokenize(text: str) -> list[Token]:
    toks: list[Token] = []
    pos, line, line_start = 0, 1, 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise ParseError("unexpected character", line, col, text[pos])
        kind = m.lastgroup
        s = m.group()
        if kind == "punct" and s == ".":
            nxt = text[pos + 1 : pos + 2]
            if nxt == "" or nxt.isspace() or nxt == "%":
                kind = "end"
        if kind != "ws":
            toks.append(Token(kind, s, line, col))
        nl = s.count("\n")
        if nl:
            line += nl
            line_start = pos + s.rfind("\n") + 1
        pos = m.end()
    toks.append(Token("eof", "", line, pos - line_start + 1))
    return toks


@dataclass
class SourceProgram:
    clauses: list[Clause] = field(default_factory=list)
    # part name -> stock; None when the program declares no inventory
    inventory: dict[str, int] | None = None


@dataclass(frozen=True)
class Query:
    guard: tuple[Term, ...]
    body: tuple[Compound, ...]

    def variables(self) -> list[str]:
        from .logic import term_vars

        out: dict[str, None] = {}
        for t in (*self.guard, *self.body):
            term_vars(t, out)
        return [v for v in out if not v.startswith("_@")]

    def numeric_vars(self) -> frozenset[str]:
        from .logic import term_vars

        out: dict[str, None] = {}
        for g in self.guard:
            term_vars(g, out)
        return frozenset(out)


def is_constraint(t: Term) -> bool:
    return isinstance(t, Compound) and t.key in CONSTRAINT_KEYS


class _Parser:
    def __init__(self, text: str, eof_ends: bool = False):
        self.toks = tokenize(text)
        self.i = 0
        self.anon = 0
        # queries may omit the final '.'
        self.eof_ends = eof_ends

    # -- token helpers ------------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("punct", "end") and t.text == text

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.i += 1
        return t

    def error(self, msg: str) -> ParseError:
        t = self.tok
        if t.kind == "eof":
            return ParseError(msg + " at end of input", t.line, t.col)
        return ParseError(msg, t.line, t.col, t.text)

    def expect(self, text: str, kind: str = "punct") -> Token:
        if self.tok.kind == kind and self.tok.text == text:
            return self.advance()
        raise self.error(f"expected {text!r}")

    def expect_end(self) -> None:
        if self.tok.kind == "end":
            self.advance()
            return
        if self.eof_ends and self.tok.kind == "eof":
            return
        raise self.error("expected '.' ending the clause")

    # -- terms ----------------------------------------------------------------
    def variable(self) -> Var:
        t = self.advance()
        if t.text == "_":
            self.anon += 1
            return Var(f"_@{self.anon}")
        return Var(t.text)

    def number(self, sign: str = "") -> NumLit:
        t = self.advance()
        return NumLit(sign + t.text)

    def term(self) -> Term:
        """term := pair ('.' term)?  with '.' right-associative (list cons)."""
        left = self.pair_term()
        if self.tok.kind == "punct" and self.tok.text == ".":
            self.advance()
            return Compound(".", (left, self.term()))
        return left

    def pair_term(self) -> Term:
        left = self.primary_term()
        if self.at(":"):
            self.advance()
            return Compound(":", (left, self.primary_term()))
        return left

    def primary_term(self) -> Term:
        t = self.tok
        if t.kind == "var":
            return self.variable()
        if t.kind == "num":
            return self.number()
        if t.kind == "punct" and t.text in "-+" and self.peek().kind == "num":
            self.advance()
            return self.number("-" if t.text == "-" else "")
        if t.kind == "punct" and t.text in "-+" and self.peek().kind == "name" and self.peek().text == "inf":
            self.advance()
            self.advance()
            return NumLit(t.text + "inf")
        if t.kind == "name":
            self.advance()
            if t.text == "inf":
                return NumLit("inf")
            if self.at("("):
                self.advance()
                args = [self.term()]
                while self.at(","):
                    self.advance()
                    args.append(self.term())
                self.expect(")")
                return Compound(t.text, tuple(args))
            return Compound(t.text)
        if self.at("("):
            self.advance()
            inner = self.term()
            self.expect(")")
            return inner
        raise self.error("expected a term")

    # -- arithmetic -------------------------------------------------------------
    def expr(self) -> Term:
        left = self.mul_expr()
        while self.tok.kind == "punct" and self.tok.text in ("+", "-"):
            op = self.advance().text
            left = Compound(op, (left, self.mul_expr()))
        return left

    def mul_expr(self) -> Term:
        left = self.unary()
        while self.tok.kind == "punct" and self.tok.text in ("*", "/"):
            op = self.advance().text
            left = Compound(op, (left, self.unary()))
        return left

    def unary(self) -> Term:
        if self.at("-"):
            if self.peek().kind == "num":
                self.advance()
                return self.number("-")
            self.advance()
            return Compound("-", (self.unary(),))
        if self.at("+"):
            self.advance()
            return self.unary()
        if self.at("("):
            self.advance()
            inner = self.expr()
            self.expect(")")
            return inner
        t = self.tok
        if t.kind == "name" and t.text in ("sum", "prod", "inv") and self.peek().text == "(":
            raise self.error("constraint atom used inside an expression")
        return self.primary_term()

    # -- goals ------------------------------------------------------------------
    def endpoint(self) -> NumLit:
        sign = ""
        if self.tok.kind == "punct" and self.tok.text in "+-":
            sign = self.advance().text
        t = self.tok
        if t.kind == "num":
            self.advance()
            return NumLit(("-" if sign == "-" else "") + t.text)
        if t.kind == "name" and t.text == "inf":
            self.advance()
            return NumLit(sign + "inf")
        raise self.error("expected a bra-ket endpoint")

    def braket(self) -> Compound:
        start = self.expect("<")
        lo = self.endpoint()
        self.expect("|")
        if self.tok.kind != "var":
            raise self.error("expected a variable in bra-ket")
        v = self.variable()
        self.expect("|")
        hi = self.endpoint()
        self.expect(">")
        if lo.value > hi.value:
            raise ParseError("bra-ket lower endpoint exceeds upper", start.line, start.col, "<")
        return Compound("in", (v, lo, hi))

    def goal(self) -> Term:
        if self.at("<"):
            return self.braket()
        t = self.tok
        if t.kind == "name" and t.text in ("sum", "prod", "inv") and self.peek().text == "(":
            self.advance()
            self.expect("(")
            args = [self.expr()]
            while self.at(","):
                self.advance()
                args.append(self.expr())
            self.expect(")")
            arity = 2 if t.text == "inv" else 3
            if len(args) != arity:
                raise ParseError(f"{t.text} takes {arity} arguments", t.line, t.col, t.text)
            return Compound(t.text, tuple(args))
        start = self.i
        left = self.expr()
        if self.tok.kind == "punct" and self.tok.text in ("=", "=<", "<=", ">="):
            op = self.advance().text
            op = "=<" if op == "<=" else op
            return Compound(op, (left, self.expr()))
        if isinstance(left, Compound) and left.functor not in ARITH_OPS | {".", ":"}:
            return left
        self.i = start
        raise self.error("expected a program atom or a constraint")

    def goal_list(self, stop: tuple[str, ...]) -> list[Term]:
        goals: list[Term] = []
        if self.tok.kind == "end" or (self.tok.kind == "punct" and self.tok.text in stop):
            return goals
        goals.append(self.goal())
        while self.at(","):
            self.advance()
            goals.append(self.goal())
        return goals

    def guard_body(self) -> tuple[tuple[Term, ...], tuple[Compound, ...]]:
        first = self.goal_list((";",))
        if self.at(";"):
            self.advance()
            guard = first
            body = self.goal_list(())
            for g in guard:
                if not is_constraint(g):
                    raise self.error(f"program atom {g.functor}/{len(g.args)} in guard")
        else:
            guard = [g for g in first if is_constraint(g)]
            body = [g for g in first if not is_constraint(g)]
        for b in body:
            if is_constraint(b):
                raise self.error(f"constraint {b.functor} after ';' belongs in the guard")
        self.expect_end()
        return tuple(guard), tuple(body)

    # -- top level ------------------------------------------------------------------
    def directive(self, prog: SourceProgram) -> None:
        t = self.tok
        if not (t.kind == "name" and t.text == "inventory"):
            raise self.error("unknown directive")
        self.advance()
        self.expect("(")
        stock: dict[str, int] = dict(prog.inventory or {})
        while True:
            item = self.pair_term()
            if not (
                isinstance(item, Compound)
                and item.functor == ":"
                and isinstance(item.args[0], Compound)
                and not item.args[0].args
                and isinstance(item.args[1], NumLit)
            ):
                raise ParseError("inventory items are part:quantity", t.line, t.col, t.text)
            q = item.args[1].value
            if q != q.to_integral_value() or q < 0:
                raise ParseError("inventory quantity must be a natural number", t.line, t.col, item.args[1].text)
            stock[item.args[0].functor] = int(q)
            if not self.at(","):
                break
            self.advance()
        self.expect(")")
        self.expect_end()
        prog.inventory = stock

    def clause(self) -> Clause:
        head = self.term()
        if not isinstance(head, Compound) or head.functor in ARITH_OPS | {".", ":"} or is_constraint(head):
            raise ParseError("clause head must be a program atom", self.toks[self.i - 1].line, 1)
        if self.at(":-"):
            self.advance()
            guard, body = self.guard_body()
        else:
            self.expect_end()
            guard, body = (), ()
        return Clause(head, guard, body)

    def program(self) -> SourceProgram:
        prog = SourceProgram()
        while self.tok.kind != "eof":
            if self.at(":-"):
                self.advance()
                self.directive(prog)
            else:
                prog.clauses.append(self.clause())
        return prog

    def query(self) -> Query:
        if self.at(":-"):
            self.advance()
        guard, body = self.guard_body()
        if self.tok.kind != "eof":
            raise self.error("unexpected text after the query")
        return Query(guard, body)


def parse_program(text: str) -> SourceProgram:
    return _Parser(text).program()


def parse_query(text: str) -> Query:
    """Parse ``:- guard ; body.``; the leading ``:-`` and final '.' are optional."""
    return _Parser(text, eof_ends=True).query()


def parse_term(text: str) -> Term:
    p = _Parser(text)
    t = p.term()
    if p.tok.kind != "eof":
        raise p.error("unexpected text after the term")
    return t


# ---------------------------------------------------------------------------
# Conversion of constraint atoms
# ---------------------------------------------------------------------------


def to_arith(t: Term) -> dc.ArithExpr:
    """Arithmetic reading of a (substituted) term."""
    if isinstance(t, Var):
        return dc.Var(t.name)
    if isinstance(t, NumLit):
        return dc.Const(t.text)
    if isinstance(t, Compound):
        if t.functor in ("+", "-", "*", "/") and len(t.args) == 2:
            a, b = to_arith(t.args[0]), to_arith(t.args[1])
            return {"+": dc.Add, "-": dc.Sub, "*": dc.Mul, "/": dc.Div}[t.functor](a, b)
        if t.functor == "-" and len(t.args) == 1:
            return dc.Neg(to_arith(t.args[0]))
    raise TypeError(f"not an arithmetic term: {format_term(t)}")


def braket_interval(t: Compound) -> Interval:
    """Outward interval of a bra-ket ``in(X, lo, hi)``."""
    lo = parse_decimal_outward(t.args[1].text).lo
    hi = parse_decimal_outward(t.args[2].text).hi
    return Interval(lo, hi)


def to_numconstraint(t: Compound) -> dc.NumConstraint:
    """The numeric constraint expressed by a constraint atom other than a bra-ket."""
    f = t.functor
    a = [to_arith(x) for x in t.args]
    if f == "sum":
        return dc.NumConstraint(dc.Add(a[0], a[1]), "=", a[2])
    if f == "prod":
        return dc.NumConstraint(dc.Mul(a[0], a[1]), "=", a[2])
    if f == "inv":
        return dc.NumConstraint(dc.Div(dc.Const("1"), a[0]), "=", a[1])
    return dc.NumConstraint(a[0], f, a[1])


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------


def _fmt_var(name: str) -> str:
    from .logic import display_name

    if name.startswith("_@"):
        return "_"
    return display_name(name)


def format_term(t: Term, names=None) -> str:
    """Source text for a term; parsing it back gives an equal term."""
    fv = names or _fmt_var
    if isinstance(t, Var):
        return fv(t.name)
    if isinstance(t, NumLit):
        return t.text
    f, args = t.functor, t.args
    if f == "." and len(args) == 2:
        head = format_term(args[0], fv)
        if isinstance(args[0], Compound) and args[0].functor in (".", ":") and len(args[0].args) == 2:
            head = f"({head})"
        elif isinstance(args[0], NumLit):
            head = f"({head})"
        return f"{head}.{format_term(args[1], fv)}"
    if f == ":" and len(args) == 2:
        parts = []
        for a in args:
            s = format_term(a, fv)
            if isinstance(a, Compound) and a.functor in (".", ":") and len(a.args) == 2:
                s = f"({s})"
            parts.append(s)
        return f"{parts[0]}:{parts[1]}"
    if not args:
        return f
    return f"{f}({', '.join(format_term(a, fv) for a in args)})"


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def format_expr(t: Term, names=None, prec: int = 0) -> str:
    fv = names or _fmt_var
    if isinstance(t, Compound) and t.functor in _PREC and len(t.args) == 2:
        p = _PREC[t.functor]
        s = f"{format_expr(t.args[0], fv, p)} {t.functor} {format_expr(t.args[1], fv, p + 1)}"
        return f"({s})" if p < prec else s
    if isinstance(t, Compound) and t.functor == "-" and len(t.args) == 1:
        return f"-{format_expr(t.args[0], fv, 3)}"
    if isinstance(t, NumLit) and t.text.startswith("-") and prec > 0:
        return f"({t.text})"
    return format_term(t, fv)


def format_goal(t: Term, names=None) -> str:
    fv = names or _fmt_var
    if isinstance(t, Compound) and t.key == ("in", 3):
        return f"<{t.args[1].text}|{format_term(t.args[0], fv)}|{t.args[2].text}>"
    if isinstance(t, Compound) and t.key in (("sum", 3), ("prod", 3), ("inv", 2)):
        return f"{t.functor}({', '.join(format_expr(a, fv) for a in t.args)})"
    if isinstance(t, Compound) and t.key in (("=", 2), ("=<", 2), (">=", 2)):
        return f"{format_expr(t.args[0], fv)} {t.functor} {format_expr(t.args[1], fv)}"
    return format_term(t, fv)


def format_clause(c: Clause) -> str:
    head = format_term(c.head)
    if not c.guard and not c.body:
        return f"{head}."
    guard = ", ".join(format_goal(g) for g in c.guard)
    body = ", ".join(format_goal(b) for b in c.body)
    return f"{head} :- {guard}; {body}." if body else f"{head} :- {guard};."


def format_query(q: Query) -> str:
    guard = ", ".join(format_goal(g) for g in q.guard)
    body = ", ".join(format_goal(b) for b in q.body)
    return f":- {guard}; {body}." if body else f":- {guard};."


def format_program(p: SourceProgram) -> str:
    lines = []
    if p.inventory is not None:
        items = ", ".join(f"{k}:{v}" for k, v in p.inventory.items())
        lines.append(f":- inventory({items}).")
    lines.extend(format_clause(c) for c in p.clauses)
    return "\n".join(lines) + "\n"


__all__ = [
    "ParseError",
    "Query",
    "SourceProgram",
    "Token",
    "braket_interval",
    "format_clause",
    "format_goal",
    "format_program",
    "format_query",
    "format_term",
    "is_constraint",
    "parse_program",
    "parse_query",
    "parse_term",
    "to_arith",
    "to_numconstraint",
    "tokenize",
]
