import random
from fractions import Fraction

from hypothesis import given, settings, strategies as st

import sceu.lp as lp
from sceu.lp import additive_feasibility, check_certificate, simplex_max


def _value(item, sol):
    return sum((c * sol.get(v, 0) for v, c in item.items()), Fraction(0))


def _check(items, ranks, res):
    if res.feasible:
        vals = [_value(it, res.solution) for it in items]
        for i in range(len(items)):
            for j in range(len(items)):
                if ranks[i] == ranks[j]:
                    assert vals[i] == vals[j]
                elif ranks[i] > ranks[j]:
                    assert vals[i] > vals[j]
    else:
        assert check_certificate(items, ranks, res.certificate)


def test_cycle_infeasible():
    # a > b, b > c, c > a encoded additively: a-b, b-c and c-a each positive
    items = [{"a": 1, "b": -1}, {"b": 1, "c": -1}, {"c": 1, "a": -1}]
    res = additive_feasibility(items, [1, 1, 1])
    _check(items, [1, 1, 1], res)
    items = [{"x": 1}, {"y": 1}, {"x": 1, "y": 1}, {}]
    ranks = [2, 2, 1, 0]  # x = y > 0 but x + y below x: impossible
    res = additive_feasibility(items, ranks)
    assert not res.feasible
    _check(items, ranks, res)


def test_equal_items_different_ranks():
    items = [{"x": 1}, {"x": 1}]
    res = additive_feasibility(items, [1, 0])
    assert not res.feasible and res.method == "elimination"
    assert check_certificate(items, [1, 0], res.certificate)


def test_all_indifferent():
    items = [{"x": 1}, {"y": 2}, {}]
    res = additive_feasibility(items, [0, 0, 0])
    assert res.feasible
    _check(items, [0, 0, 0], res)


def test_simplex_small():
    # max x + y s.t. x + 2y <= 4, 3x + y <= 6
    F = Fraction
    z, y, val = simplex_max([[F(1), F(2)], [F(3), F(1)]], [F(4), F(6)], [F(1), F(1)])
    assert val == F(14, 5) and z == [F(8, 5), F(6, 5)]
    # duals certify optimality: b.y == value
    assert F(4) * y[0] + F(6) * y[1] == val


def test_bad_certificates():
    items = [{"x": 1}, {"y": 1}]
    assert not check_certificate(items, [1, 0], [])
    assert not check_certificate(items, [1, 0], [(1, 0, Fraction(1))])
    assert not check_certificate(items, [1, 0], [(0, 1, Fraction(-1))])


def _random_system(seed, hidden):
    rng = random.Random(seed)
    nv = rng.randint(1, 5)
    items = [{f"v{k}": rng.randint(-2, 2) for k in rng.sample(range(nv), rng.randint(0, nv))}
             for _ in range(rng.randint(2, 9))]
    items = [{v: c for v, c in it.items() if c} for it in items]
    if hidden:
        x = {f"v{k}": Fraction(rng.randint(-3, 3)) for k in range(nv)}
        vals = [_value(it, x) for it in items]
        order = sorted(set(vals))
        ranks = [order.index(v) for v in vals]
    else:
        ranks = [rng.randint(0, 3) for _ in items]
    return items, ranks


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10 ** 9), st.booleans())
def test_random_systems(seed, hidden):
    items, ranks = _random_system(seed, hidden)
    res = additive_feasibility(items, ranks)
    if hidden:
        assert res.feasible
    _check(items, ranks, res)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 9), st.booleans())
def test_exact_path_agrees(seed, hidden):
    # disabling HiGHS forces the exact simplex; verdicts must agree
    items, ranks = _random_system(seed, hidden)
    fast = additive_feasibility(items, ranks)
    real = lp.linprog
    try:
        lp.linprog = lambda *a, **k: type("R", (), {"status": 2, "fun": 0.0})()
        slow = additive_feasibility(items, ranks)
    finally:
        lp.linprog = real
    assert slow.feasible == fast.feasible
    assert slow.method in ("exact-simplex", "elimination")
    _check(items, ranks, slow)
