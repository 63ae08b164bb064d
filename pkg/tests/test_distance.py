import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

import oracles
from varprin import PointSpace, axiom_report, evaluate, make_builtin, product_distance, symmetrize
from varprin.distance import distance_from_dict
from varprin.errors import AxiomViolation, BadParameter, BudgetExceeded, DomainViolation, UnknownPoint

KL_XY = 0.5 * math.log(2.0) + 0.5 * math.log(2.0 / 3.0)
KL_YX = 0.25 * math.log(0.5) + 0.75 * math.log(1.5)


def coord_space(coords):
    return PointSpace([f"p{i}" for i in range(len(coords))], np.array(coords, dtype=float))


def kl_pair():
    return coord_space([[0.5, 0.5], [0.25, 0.75]])


# --- point spaces ---------------------------------------------------------------


def test_point_space_rejects_duplicates_and_empty():
    with pytest.raises(BadParameter):
        PointSpace(["a", "a"])
    with pytest.raises(BadParameter):
        PointSpace([])


def test_point_space_coords_mapping_and_unknown_point():
    sp = PointSpace(["a", "b"], {"a": [0.0, 1.0], "b": [1.0, 1.0]})
    assert sp.index("b") == 1
    with pytest.raises(UnknownPoint):
        sp.index("c")


def test_square_space_is_row_major():
    sp = PointSpace(["a", "b", "c"])
    assert sp.square.index(("b", "c")) == 1 * 3 + 2
    assert len(sp.square) == 9


# --- families -----------------------------------------------------------------


def test_lp_frac_closed_form():
    d = make_builtin("lp_frac", {"p": 0.5}, coord_space([[0, 0], [1, 1]]))
    assert evaluate(d, "p0", "p1") == 4.0


def test_kl_closed_form_both_directions():
    d = make_builtin("kl", None, kl_pair())
    assert d.evaluate("p0", "p1") == pytest.approx(KL_XY, abs=1e-12)
    assert d.evaluate("p1", "p0") == pytest.approx(KL_YX, abs=1e-12)
    assert d.evaluate("p0", "p1") == pytest.approx(0.143841, abs=1e-6)


def test_kl_symmetrized_matches_closed_form_sum():
    s = symmetrize(make_builtin("kl", None, kl_pair()), 1, 1)
    assert s.evaluate("p0", "p1") == pytest.approx(KL_XY + KL_YX, abs=1e-12)
    assert s.evaluate("p0", "p1") == s.evaluate("p1", "p0")


def test_itakura_saito_matches_oracle():
    c = [[0.5, 2.0], [1.5, 0.25], [3.0, 1.0]]
    d = make_builtin("itakura_saito", None, coord_space(c))
    ref = oracles.table(c, oracles.itakura_saito)
    assert np.allclose(d.matrix, ref, atol=1e-12)


@pytest.mark.parametrize("family,fn", [("euclidean", oracles.euclid), ("sq_euclidean", oracles.sq_euclid)])
def test_coordinate_families_match_oracle(family, fn):
    rng = np.random.default_rng(7)
    c = rng.random((6, 3)).tolist()
    d = make_builtin(family, None, coord_space(c))
    assert np.allclose(d.matrix, oracles.table(c, fn), atol=1e-12)


def test_lp_frac_rejects_bad_exponent():
    sp = coord_space([[0, 0], [1, 1]])
    for p in (1.5, 1.0, 0.0, -0.2):
        with pytest.raises(BadParameter):
            make_builtin("lp_frac", {"p": p}, sp)


def test_table_validation():
    sp = PointSpace(["a", "b"])
    d = make_builtin("table", {"matrix": [[0, 1], [2, 0]]}, sp)
    assert d.evaluate("a", "b") == 1 and d.evaluate("b", "a") == 2
    with pytest.raises(AxiomViolation):
        make_builtin("table", {"matrix": [[0.5, 1], [2, 0]]}, sp)
    with pytest.raises(AxiomViolation):
        make_builtin("table", {"matrix": [[0, 0], [2, 0]]}, sp)
    with pytest.raises(BadParameter):
        make_builtin("table", {"matrix": [[0, 1, 1], [2, 0, 1]]}, sp)


def test_kl_domain_checks():
    with pytest.raises(DomainViolation):
        make_builtin("kl", None, coord_space([[0.0, 1.0], [0.5, 0.5]]))
    with pytest.raises(DomainViolation):
        make_builtin("kl", None, coord_space([[0.3, 0.3], [0.5, 0.5]]))
    with pytest.raises(DomainViolation):
        make_builtin("itakura_saito", None, coord_space([[-1.0, 1.0], [0.5, 0.5]]))


def test_duplicate_coordinates_break_identity():
    with pytest.raises(AxiomViolation):
        make_builtin("euclidean", None, coord_space([[1, 1], [1, 1]]))


def test_symmetrize_weights():
    sp = PointSpace(["a", "b"])
    d = make_builtin("table", {"matrix": [[0, 1], [3, 0]]}, sp)
    assert np.array_equal(symmetrize(d, 1, 0).matrix, d.matrix)
    assert symmetrize(d, 2, 0.5).evaluate("a", "b") == 2 * 1 + 0.5 * 3
    with pytest.raises(BadParameter):
        symmetrize(d, 0, 0)
    with pytest.raises(BadParameter):
        symmetrize(d, -1, 2)
    e = make_builtin("euclidean", None, coord_space([[0, 0], [3, 4]]))
    assert symmetrize(e, 1, 1).evaluate("p0", "p1") == 10.0


def test_product_distance_swaps_arguments():
    sp = PointSpace(["a", "b"])
    d = make_builtin("table", {"matrix": [[0, 1], [2, 0]]}, sp)
    rho = product_distance(d)
    assert rho.evaluate(("a", "a"), ("b", "b")) == 4.0
    assert rho.evaluate(("b", "b"), ("a", "a")) == 2.0
    assert rho.evaluate(("a", "b"), ("a", "b")) == 0.0


def test_serialization_round_trip():
    sp = coord_space([[0.2, 0.8], [0.6, 0.4], [0.5, 0.5]])
    s = symmetrize(make_builtin("kl", None, sp), 1.0, 0.5)
    back = distance_from_dict(s.to_dict(), sp)
    assert np.array_equal(back.matrix, s.matrix)
    t = make_builtin("table", {"matrix": [[0, 1], [2, 0]]}, PointSpace(["a", "b"]))
    assert t.to_dict() == {"family": "table", "params": {"matrix": [[0.0, 1.0], [2.0, 0.0]]}}


# --- axiom reports --------------------------------------------------------------


def test_lp_half_triangle_witness_exact():
    d = make_builtin("lp_frac", {"p": 0.5}, coord_space([[0, 0], [1, 0], [1, 1]]))
    rep = axiom_report(d)
    assert ("p0", "p1", "p2", 4.0, 2.0) in rep.triangle_witnesses
    assert rep.identity_ok and rep.mode == "full"


def test_kl_symmetry_witness():
    rep = axiom_report(make_builtin("kl", None, kl_pair()))
    (x, y, dxy, dyx), = rep.symmetry_witnesses
    assert (x, y) == ("p0", "p1")
    assert dxy == pytest.approx(KL_XY, abs=1e-12) and dyx == pytest.approx(KL_YX, abs=1e-12)


def test_witness_lists_are_exhaustive_and_valid(backend):
    rng = np.random.default_rng(3)
    m = 10 * (1 - rng.random((9, 9)))
    np.fill_diagonal(m, 0)
    d = make_builtin("table", {"matrix": m}, PointSpace(list(range(9))))
    rep = axiom_report(d)
    D = m.tolist()
    assert rep.n_triangle == len(oracles.triangle_violations(D))
    assert rep.n_symmetry == len(oracles.asymmetric_pairs(D))
    for x, y, z, dxz, s in rep.triangle_witnesses:
        assert dxz > s + rep.tol
    for x, y, dxy, dyx in rep.symmetry_witnesses:
        assert abs(dxy - dyx) > rep.tol


def test_budget_and_sampling():
    d = make_builtin("euclidean", None, coord_space(np.random.default_rng(0).random((30, 2))))
    with pytest.raises(BudgetExceeded):
        axiom_report(d, max_full=100)
    rep = axiom_report(d, sample=500, seed=1, max_full=100)
    assert rep.mode == "sampled" and rep.triples_checked == 500 and rep.n_triangle == 0


# --- properties -----------------------------------------------------------------

coords_st = st.integers(2, 7).flatmap(
    lambda n: st.lists(
        st.lists(st.floats(0.05, 5.0), min_size=3, max_size=3), min_size=n, max_size=n, unique_by=tuple
    )
)


@settings(max_examples=60, deadline=None)
@given(coords_st, st.sampled_from(["euclidean", "sq_euclidean", "lp_frac", "itakura_saito", "kl"]))
def test_identity_axiom_holds_for_every_builtin(coords, family):
    c = np.array(coords)
    if family == "kl":
        c = c / c.sum(axis=1, keepdims=True)
        if len(np.unique(c, axis=0)) < len(c):
            return
    params = {"p": 0.5} if family == "lp_frac" else None
    D = make_builtin(family, params, coord_space(c)).matrix
    off = ~np.eye(len(c), dtype=bool)
    assert np.all(np.diag(D) == 0.0)
    assert np.all(D[off] > 0.0)


@settings(max_examples=40, deadline=None)
@given(coords_st, st.floats(0.1, 3.0))
def test_equal_weight_symmetrization_is_bitwise_symmetric(coords, w):
    d = make_builtin("itakura_saito", None, coord_space(coords))
    S = symmetrize(d, w, w).matrix
    assert np.array_equal(S, S.T)


@settings(max_examples=30, deadline=None)
@given(coords_st)
def test_product_of_symmetric_base_is_symmetric(coords):
    rho = product_distance(make_builtin("euclidean", None, coord_space(coords)))
    R = rho.matrix
    assert np.array_equal(R, R.T)


@settings(max_examples=40, deadline=None)
@given(coords_st, st.floats(0.1, 0.95), st.lists(st.floats(-3, 3), min_size=3, max_size=3), st.permutations(range(3)))
def test_lp_frac_translation_and_permutation(coords, p, shift, perm):
    c = np.array(coords)
    # a shift can round two distinct points onto one
    assume(len(np.unique(c + np.array(shift), axis=0)) == len(c))
    base = make_builtin("lp_frac", {"p": p}, coord_space(c)).matrix
    moved = make_builtin("lp_frac", {"p": p}, coord_space(c + np.array(shift))).matrix
    permuted = make_builtin("lp_frac", {"p": p}, coord_space(c[:, list(perm)])).matrix
    assert np.allclose(base, moved, rtol=1e-9, atol=1e-9)
    assert np.allclose(base, permuted, rtol=1e-12, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_euclidean_has_no_triangle_witnesses(seed):
    c = np.random.default_rng(seed).random((12, 2))
    rep = axiom_report(make_builtin("euclidean", None, coord_space(c)))
    assert rep.n_triangle == 0 and rep.n_symmetry == 0
