import io
import re

from clpncsp.cli import main
from clpncsp.interval import parse_interval
from clpncsp.parser import braket_interval, parse_term

from conftest import PROGRAMS

QUAD = str(PROGRAMS / "quadratic.ncsp")
RES = str(PROGRAMS / "resistor.ncsp")
BRAKET = re.compile(r"<([^|<>]+)\|([A-Za-z_][\w]*)\|([^|<>]+)>")


def cli(*argv, stdin=None, monkeypatch=None):
    out, err = io.StringIO(), io.StringIO()
    if stdin is not None:
        monkeypatch.setattr("sys.stdin", io.StringIO(stdin))
    code = main(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def test_root_query_prints_two_brakets():
    code, out, _ = cli(QUAD, "root(X).")
    assert code == 0
    found = BRAKET.findall(out)
    assert [v for _, v, _ in found] == ["X", "X"]
    assert "% box 1 of 2" in out and out.rstrip().endswith(".")


def test_false_on_finite_failure():
    code, out, _ = cli(QUAD, "square(X, -1).")
    assert code == 1 and out.strip() == "false."


def test_budget_diagnostic():
    code, out, err = cli(RES, ":- <115.0|R|120.0>; netw(A,N,B,R,PL).", "--depth", "2")
    assert code == 2
    assert "budget exceeded" in err and "depth limit 2" in err
    assert "false." not in out


def test_file_and_parse_errors():
    code, _, err = cli("/nonexistent.ncsp", "x.")
    assert code == 3 and "nonexistent" in err
    code, _, err = cli(QUAD, "root(X")
    assert code == 3 and "line 1" in err


def test_bad_program(tmp_path):
    p = tmp_path / "bad.ncsp"
    p.write_text("p(X) :- <0|X|1>;.\nq(X :- .\n")
    code, _, err = cli(str(p), "p(X).")
    assert code == 3 and "line 2" in err


def test_structured_resistor_answer():
    q = (
        ":- <149.9|R150|150.1>, <499.9|R500|500.1>, <99.9|R100|100.1>, <249.9|R250|250.1>; "
        "netw(a, par(at(R150), ser(at(R500), par(at(R100), at(R250)))), b, R, PL)."
    )
    code, out, _ = cli(RES, q, "--digits", "6")
    assert code == 0
    assert "PL = (r100:1).(r150:1).(r250:1).(r500:1).nil" in out
    (r,) = [(lo, hi) for lo, v, hi in BRAKET.findall(out) if v == "R"]
    assert float(r[0]) <= 12000 / 101 <= float(r[1])


def test_brakets_reparse_to_containing_intervals():
    from clpncsp.clp import Options, Program, solve
    from clpncsp.parser import parse_program, parse_query

    prog = Program(parse_program(open(QUAD).read()))
    for digits in ("17", "4"):
        code, out, _ = cli(QUAD, "nonpos(X).", "--digits", digits, "--no-consolidate", "--eps-split", "0.01")
        assert code == 0
        (answer,) = list(solve(prog, parse_query("nonpos(X)."), Options(eps_split=0.01, consolidate=False)))
        printed = [braket_interval(parse_term(f"in(X, {lo}, {hi})")) for lo, _, hi in BRAKET.findall(out)]
        inner = [b["X"] for b in answer.boxes]
        assert len(printed) == len(inner)
        assert all(i.subset(p) for i, p in zip(inner, printed))


def test_trace_lines():
    code, out, _ = cli(QUAD, "root(X).", "--trace")
    kinds = {line.split(" ", 1)[0] for line in out.splitlines() if re.match(r"^[rcis] ", line)}
    assert kinds == {"r", "c", "i", "s"}
    _, quiet, _ = cli(QUAD, "root(X).")
    assert not any(re.match(r"^[rcis] ", line) for line in quiet.splitlines())


def test_consolidation_flag_changes_box_count():
    _, merged, _ = cli(QUAD, "nonpos(X).", "--eps-split", "0.01")
    _, raw, _ = cli(QUAD, "nonpos(X).", "--eps-split", "0.01", "--no-consolidate")
    assert len(BRAKET.findall(merged)) < len(BRAKET.findall(raw))


def test_repl(monkeypatch):
    code, out, _ = cli(QUAD, stdin="root(X).\n\nsquare(X, -1).\nhalt.\n", monkeypatch=monkeypatch)
    assert code == 1
    assert out.count("?- ") == 4 and "false." in out and "<" in out


def test_repl_eof(monkeypatch):
    code, out, _ = cli(QUAD, stdin="root(X).\n", monkeypatch=monkeypatch)
    assert code == 0


def test_format_outward_digits_parse():
    code, out, _ = cli(QUAD, "root(X).", "--digits", "3")
    for lo, _, hi in BRAKET.findall(out):
        iv = parse_interval(f"[{lo},{hi}]")
        assert iv.lo <= iv.hi
