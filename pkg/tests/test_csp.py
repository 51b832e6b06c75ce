import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clpncsp.csp import (
    EMPTY_BOX,
    Box,
    BoxBudgetExceeded,
    Csp,
    certainly_inside,
    consolidate,
    enumerate_boxes,
    propagate,
)
from clpncsp.dro import Eq, In, Inv, Le, Prod, Sum
from clpncsp.interval import EMPTY, FULL, Interval, point
from clpncsp.oracle import random_csp, sample_check

inf = math.inf
I = Interval


def quadratic(rel_interval):
    cs = [Sum("v", "two", "x"), Prod("x", "v", "w"), In("w", rel_interval), In("two", point(2))]
    return Csp.of(cs, ["x"]), Box({"x": I(-10, 10), "v": FULL, "w": FULL, "two": FULL})


def test_box_normalizes_empty():
    assert Box({"x": I(0, 1), "y": EMPTY}) is EMPTY_BOX
    assert EMPTY_BOX.is_empty and EMPTY_BOX.subset(Box({"x": I(0, 1)}))
    b = Box({"x": I(0, 1)})
    assert b.update({"x": EMPTY}) is EMPTY_BOX
    assert b.extend(["y"])["y"] == FULL


def test_csp_rejects_unknown_variable():
    with pytest.raises(ValueError):
        Csp(("x",), (Le("x", "y"),))
    assert Csp.of([Le("x", "y"), Le("x", "y")]).constraints == (Le("x", "y"),)


def test_propagate_examples():
    c = Csp.of([Sum("x", "y", "z")])
    assert propagate(c, {"x": I(0, 2), "y": I(0, 2), "z": I(3, 5)}) == Box(
        {"x": I(1, 2), "y": I(1, 2), "z": I(3, 4)}
    )
    assert propagate(Csp.of([Le("x", "y")]), {"x": I(4, 5), "y": I(1, 3)}) is EMPTY_BOX


def test_propagate_cannot_narrow_quadratic():
    csp, init = quadratic(I(-inf, 0))
    assert propagate(csp, init)["x"] == I(-10, 10)


def test_propagate_needs_all_domains():
    with pytest.raises(KeyError):
        propagate(Csp.of([Le("x", "y")]), {"x": FULL})


def test_enumerate_quadratic_inequality():
    csp, init = quadratic(I(-inf, 0))
    boxes = enumerate_boxes(csp, init, 1e-6)
    xs = consolidate([b.project(["x"]) for b in boxes])
    assert len(xs) == 1 and xs[0]["x"] == I(0, 2)


def test_enumerate_quadratic_equation():
    csp, init = quadratic(point(0))
    xs = consolidate([b.project(["x"]) for b in enumerate_boxes(csp, init, 1e-6)])
    assert [b["x"] for b in xs] == [point(0), point(2)]


def test_enumerate_square_minus_one_fails():
    csp = Csp.of([Prod("x", "x", "w"), In("w", point(-1))])
    assert enumerate_boxes(csp, {"x": I(-10, 10), "w": FULL}, 1e-6) == []


def test_enumerate_unconstrained():
    assert enumerate_boxes(Csp(("x",)), {"x": I(0, 1)}, 1.0) == [Box({"x": I(0, 1)})]


def test_enumerate_without_inner_test_splits_to_eps():
    csp = Csp.of([Le("x", "y")])
    boxes = enumerate_boxes(csp, {"x": I(0, 1), "y": I(0, 1)}, 0.25, inner=False)
    assert all(b["x"].width <= 0.25 and b["y"].width <= 0.25 for b in boxes)
    # the inner test accepts the box at once
    assert enumerate_boxes(csp, {"x": I(0, 0.5), "y": I(0.5, 1)}, 0.25) == [Box({"x": I(0, 0.5), "y": I(0.5, 1)})]


def test_box_budget():
    csp = Csp.of([Prod("x", "y", "z"), In("z", point(1))])
    with pytest.raises(BoxBudgetExceeded) as e:
        enumerate_boxes(csp, {"x": I(1, 4), "y": I(0, 4), "z": FULL}, 1e-9, max_boxes=8, inner=False)
    assert len(e.value.partial) == 9


def test_certainly_inside():
    csp, _ = quadratic(I(-inf, 0))
    box = Box({"x": I(0.5, 1), "v": I(-1.5, -1), "w": I(-1.5, -0.5), "two": point(2)})
    assert certainly_inside(csp, box)
    box = Box({"x": I(1.5, 2.5), "v": I(-0.5, 0.5), "w": I(-1.25, 1.25), "two": point(2)})
    assert not certainly_inside(csp, box)


def test_enumerate_leaves_disjoint_before_consolidation():
    csp, init = quadratic(I(-inf, 0))
    boxes = enumerate_boxes(csp, init, 1e-2, inner=False, max_boxes=100000)
    assert len(boxes) > 50
    for i, a in enumerate(boxes):
        for b in boxes[i + 1 :]:
            assert any(a[v].hi <= b[v].lo or b[v].hi <= a[v].lo for v in a)


def test_consolidate_examples():
    assert consolidate([Box({"x": I(0, 1)}), Box({"x": I(1, 2)})]) == [Box({"x": I(0, 2)})]
    assert consolidate([Box({"x": I(0, 1)}), Box({"x": I(2, 3)})]) == [Box({"x": I(0, 1)}), Box({"x": I(2, 3)})]
    two = [Box({"x": I(0, 1), "y": I(0, 1)}), Box({"x": I(1, 2), "y": I(5, 6)})]
    assert consolidate(two) == two


def test_consolidate_cascades():
    grid = [Box({"x": I(i, i + 1), "y": I(j, j + 1)}) for i in range(3) for j in range(3)]
    assert consolidate(grid) == [Box({"x": I(0, 3), "y": I(0, 3)})]


def test_consolidate_rejects_mixed_variables():
    with pytest.raises(ValueError):
        consolidate([Box({"x": I(0, 1)}), Box({"y": I(0, 1)})])


@settings(max_examples=100)
@given(st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5)), min_size=1, max_size=12))
def test_consolidate_preserves_union(cells):
    boxes = [Box({"x": I(i, i + 1), "y": I(j, j + 1)}) for i, j in cells]
    merged = consolidate(boxes)

    def covered(bs, p):
        return any(p[0] in b["x"] and p[1] in b["y"] for b in bs)

    for px in range(13):
        for py in range(13):
            p = (px / 2 + 0.25, py / 2 + 0.25)
            assert covered(boxes, p) == covered(merged, p)


def random_instances(n, seed):
    rng = random.Random(seed)
    return [random_csp(rng, n_vars=rng.randint(2, 5), n_constraints=rng.randint(1, 5)) for _ in range(n)]


def test_propagate_idempotent_contracting_monotone():
    rng = random.Random(7)
    for csp, init in random_instances(200, 1):
        out = propagate(csp, init)
        if out.is_empty:
            continue
        assert out.subset(init)
        assert propagate(csp, out) == out
        smaller = Box({v: I(d.lo, d.lo + (d.hi - d.lo) * rng.random()) for v, d in init.items()})
        inner = propagate(csp, smaller)
        assert inner.subset(out)


def test_propagate_order_independent():
    rng = random.Random(3)
    for csp, init in random_instances(100, 2):
        ref = propagate(csp, init)
        for _ in range(20):
            cs = list(csp.constraints)
            rng.shuffle(cs)
            assert propagate(Csp(csp.vars, tuple(cs)), init) == ref


def test_propagate_sound_on_samples():
    for i, (csp, init) in enumerate(random_instances(40, 4)):
        out = propagate(csp, init)
        cover = [] if out.is_empty else [out]
        assert sample_check(csp, init, cover, n=300, seed=i) == 0


def test_enumerate_sound_on_samples():
    rng = random.Random(5)
    for i in range(20):
        csp, init = random_csp(rng, n_vars=rng.randint(2, 3), n_constraints=rng.randint(1, 4), bound=2.0)
        boxes = enumerate_boxes(csp, init, 0.1, max_boxes=100000)
        assert sample_check(csp, init, boxes, n=300, seed=i) == 0
