import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from varprin import (
    NestedFamily,
    PointSet,
    PointSpace,
    SequenceTrace,
    Verdict,
    cantor_intersect,
    cauchy_modulus,
    converges_to,
    make_builtin,
    product_distance,
    right_ball,
    sublevel_set,
)
from varprin.engine import ExtendedObjective
from varprin.errors import BadParameter, HypothesisViolation, NonSingleton, UnknownPoint
from varprin.sequences import LEFT, RIGHT, limits


def table(points, m):
    return make_builtin("table", {"matrix": m}, PointSpace(points))


ABC = table(["a", "b", "c"], [[0, 3, 3], [1, 0, 3], [2, 3, 0]])


def test_right_ball_uses_d_y_x():
    assert set(right_ball(ABC, "a", 1.5)) == {"a", "b"}
    assert set(right_ball(ABC, "a", 100)) == {"a", "b", "c"}
    with pytest.raises(UnknownPoint):
        right_ball(ABC, "z", 1.0)


def test_right_ball_asymmetric():
    d = table(["a", "b"], [[0, 5], [0.1, 0]])
    assert set(right_ball(d, "a", 1)) == {"a", "b"}
    assert set(right_ball(d, "b", 1)) == {"b"}


def test_cauchy_modulus_examples():
    d = table(["a", "b"], [[0, 1], [1, 0]])
    assert cauchy_modulus(d, SequenceTrace(["a"] * 4, 0)) == [0, 0, 0, 0]
    alt = SequenceTrace(["a", "b", "a", "b", "a", "b"])
    assert cauchy_modulus(d, alt)[:-1] == [1.0] * 5
    ev = SequenceTrace(["a", "b", "a", "b", "b", "b"], 3)
    assert cauchy_modulus(d, ev)[3:] == [0.0, 0.0, 0.0]


def test_cauchy_modulus_sides():
    d = table(["a", "b"], [[0, 1], [4, 0]])
    seq = SequenceTrace(["a", "b"])
    # right: d(x_j, x_i) with j >= i -> d(b, a) = 4; left: d(a, b) = 1
    assert cauchy_modulus(d, seq, RIGHT)[0] == 4.0
    assert cauchy_modulus(d, seq, LEFT)[0] == 1.0


def test_converges_to_verdicts():
    seq = SequenceTrace(["a", "b", "c", "c"], 2)
    assert converges_to(ABC, seq, "c") is Verdict.YES
    assert converges_to(ABC, seq, "a") is Verdict.NO
    open_tail = SequenceTrace(["a", "b"])
    assert converges_to(ABC, open_tail, "a") is Verdict.INCONCLUSIVE
    assert converges_to(ABC, open_tail, "b", LEFT) is Verdict.INCONCLUSIVE


def test_sequence_trace_validation():
    with pytest.raises(BadParameter):
        SequenceTrace([])
    with pytest.raises(BadParameter):
        SequenceTrace(["a", "b"], 0)
    with pytest.raises(BadParameter):
        SequenceTrace(["a"], 3)


def test_sublevel_set_examples():
    sp = PointSpace(["a", "b", "c"])
    f = ExtendedObjective(sp, [0, 1, 2])
    assert set(sublevel_set(sp, f, 1)) == {"a", "b"}
    assert len(sublevel_set(sp, f, -1)) == 0
    g = ExtendedObjective(sp, [0, "+inf", 2])
    assert set(sublevel_set(sp, g, 1e300)) == {"a", "c"}


def test_cantor_constant_family():
    fam = NestedFamily(tuple(PointSet(("a",)) for _ in range(6)), ("a",) * 6, tuple(2.0 ** -i for i in range(6)))
    assert cantor_intersect(ABC, fam) == ("a", True)


def test_cantor_bp_worked_family():
    d = table(["a", "b"], [[0, 1], [1, 0]])
    # S_0 = {a, b} about b with radius 4, S_1 = {a} with radius 2, then the constant tail
    fam = NestedFamily(
        (PointSet(("a", "b")), PointSet(("a",)), PointSet(("a",)), PointSet(("a",)), PointSet(("a",))),
        ("b", "a", "a", "a", "a"),
        (4.0, 2.0, 1.0, 0.5, 0.25),
    )
    assert cantor_intersect(d, fam) == ("a", True)


def test_cantor_rejects_broken_hypotheses():
    one = PointSet(("a",))
    with pytest.raises(HypothesisViolation):
        cantor_intersect(ABC, NestedFamily((one,) * 3, ("a",) * 3, (1.0, 1.0, 1.0)))
    with pytest.raises(HypothesisViolation):
        cantor_intersect(ABC, NestedFamily((one, PointSet(("a", "b"))), ("a", "a"), (4.0, 0.1)))
    with pytest.raises(HypothesisViolation):
        cantor_intersect(ABC, NestedFamily((PointSet(()),), ("a",), (0.1,)))
    with pytest.raises(HypothesisViolation):
        cantor_intersect(ABC, NestedFamily((one,), ("b",), (0.1,)))
    with pytest.raises(HypothesisViolation):
        # b sits at d(b, a) = 1, outside the open ball of radius 1
        cantor_intersect(ABC, NestedFamily((PointSet(("a", "b")), one), ("a", "a"), (1.0, 0.1)))


def test_cantor_closed_ball_relaxation():
    fam = NestedFamily((PointSet(("a", "b")), PointSet(("a",))), ("a", "a"), (1.0, 0.1), closed_balls=True)
    assert cantor_intersect(ABC, fam) == ("a", True)


def test_cantor_nonsingleton():
    fam = NestedFamily((PointSet(("a", "b")),), ("a",), (2.0,))
    with pytest.raises(NonSingleton):
        cantor_intersect(ABC, fam, cutoff=5.0)


# --- properties -----------------------------------------------------------------


def rand_table(seed, n):
    rng = np.random.default_rng(seed)
    m = 10 * (1 - rng.random((n, n)))
    np.fill_diagonal(m, 0)
    return make_builtin("table", {"matrix": m}, PointSpace([f"x{i}" for i in range(n)]))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 8), st.floats(1e-6, 20))
def test_center_is_in_its_ball_and_ball_is_predicate(seed, n, r):
    d = rand_table(seed, n)
    for x in d.space:
        ball = right_ball(d, x, r)
        assert x in ball
        assert set(ball) == {y for y in d.space if d.evaluate(y, x) < r}


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=10), st.floats(-6, 6), st.floats(0, 3))
def test_sublevel_monotone(vals, lam, step):
    sp = PointSpace(list(range(len(vals))))
    f = ExtendedObjective(sp, vals)
    assert sublevel_set(sp, f, lam) <= sublevel_set(sp, f, lam + step)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.lists(st.integers(0, 5), min_size=1, max_size=8), st.sampled_from([RIGHT, LEFT]))
def test_constant_tail_has_exactly_one_limit_and_is_cauchy(seed, idx, side):
    d = rand_table(seed, 6)
    terms = [d.space.points[i] for i in idx] + [d.space.points[idx[-1]]] * 2
    seq = SequenceTrace(terms, len(terms) - 2)
    assert limits(d, seq, side) == [terms[-1]]
    assert cauchy_modulus(d, seq, side)[-2:] == [0.0, 0.0]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), min_size=1, max_size=6))
def test_rho_convergence_splits_into_left_convergence(seed, pairs):
    d = rand_table(seed, 4)
    rho = product_distance(d)
    pts = d.space.points
    terms = [(pts[a], pts[b]) for a, b in pairs]
    seq = SequenceTrace(terms + [terms[-1]], len(terms))
    xs = SequenceTrace([t[0] for t in seq.terms], seq.constant_from)
    ys = SequenceTrace([t[1] for t in seq.terms], seq.constant_from)
    for x in pts:
        for y in pts:
            lhs = converges_to(rho, seq, (x, y), RIGHT) is Verdict.YES
            rhs = converges_to(d, xs, x, LEFT) is Verdict.YES and converges_to(d, ys, y, LEFT) is Verdict.YES
            assert lhs == rhs
