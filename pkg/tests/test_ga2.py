"""Cl(2,0) product, grade projection and the pseudoscalar J."""

import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from planimm import ga2
from planimm.ga2 import E1, E2, J, ONE, Multivector2, grade_project, inner, j_rotate, mv_product, outer, vector

reals = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
mvs = st.builds(Multivector2, reals, reals, reals, reals)
vecs = st.builds(vector, reals, reals)


def close(a, b, scale=1.0):
    return a.allclose(b, atol=1e-12 * scale)


def test_generator_relations():
    assert mv_product(E1, E1) == ONE
    assert mv_product(E2, E2) == ONE
    assert mv_product(E1, E2) == J
    assert mv_product(E2, E1) == -J
    assert mv_product(J, J) == -ONE


def test_j_acts_as_clockwise_quarter_turn():
    assert mv_product(J, E1) == -E2
    assert mv_product(J, E2) == E1
    np.testing.assert_array_equal(j_rotate(np.array([1.0, 0.0])), [0.0, -1.0])
    np.testing.assert_array_equal(j_rotate(np.array([0.0, 1.0])), [1.0, 0.0])


def test_product_table_against_symbolic_oracle():
    # Build the algebra as 4x4 left-regular representation matrices in sympy
    # from e1^2 = e2^2 = 1 and e1 e2 = -e2 e1, then compare to mv_product.
    a = sp.symbols("a0:4")
    b = sp.symbols("b0:4")
    table = {  # basis index products: (i, j) -> (sign, k) on {1, e1, e2, e12}
        (0, 0): (1, 0), (0, 1): (1, 1), (0, 2): (1, 2), (0, 3): (1, 3),
        (1, 0): (1, 1), (1, 1): (1, 0), (1, 2): (1, 3), (1, 3): (1, 2),
        (2, 0): (1, 2), (2, 1): (-1, 3), (2, 2): (1, 0), (2, 3): (-1, 1),
        (3, 0): (1, 3), (3, 1): (-1, 2), (3, 2): (1, 1), (3, 3): (-1, 0),
    }
    expected = [0] * 4
    for (i, j), (sign, k) in table.items():
        expected[k] += sign * a[i] * b[j]
    got = mv_product(Multivector2(*a), Multivector2(*b)).components()
    for e, g in zip(expected, got):
        assert sp.expand(e - g) == 0


@given(mvs, mvs, mvs)
def test_associative(a, b, c):
    scale = 1 + max(abs(x) for m in (a, b, c) for x in m.components()) ** 3
    assert close(mv_product(mv_product(a, b), c), mv_product(a, mv_product(b, c)), scale)


@given(vecs, vecs)
def test_vector_product_splits_into_inner_and_outer(v, w):
    scale = 1 + max(abs(x) for m in (v, w) for x in m.components()) ** 2
    assert close(mv_product(v, w), inner(v, w) + outer(v, w), scale)
    assert inner(v, w)[0] == inner(v, w)
    assert outer(v, w)[2] == outer(v, w)


@given(vecs, vecs)
def test_duality_with_right_multiplied_j(v, w):
    scale = 1 + max(abs(x) for m in (v, w) for x in m.components()) ** 2
    wj = mv_product(w, J)
    assert close(mv_product(J, inner(v, w)), outer(v, wj), scale)
    assert close(mv_product(J, outer(v, w)), inner(v, wj), scale)


@given(vecs, vecs)
def test_duality_with_left_multiplied_j_flips_sign(v, w):
    scale = 1 + max(abs(x) for m in (v, w) for x in m.components()) ** 2
    jw = mv_product(J, w)
    assert close(mv_product(J, inner(v, w)), -outer(v, jw), scale)
    assert close(mv_product(J, outer(v, w)), -inner(v, jw), scale)


@given(vecs)
def test_j_anticommutes_with_vectors(v):
    assert mv_product(v, J) == -mv_product(J, v)


@given(vecs)
def test_j_rotate_matches_left_product(v):
    assert j_rotate(v) == mv_product(J, v)
    arr = np.array([v.v1, v.v2])
    np.testing.assert_array_equal(j_rotate(arr), [mv_product(J, v).v1, mv_product(J, v).v2])


@given(mvs)
def test_grade_projections_sum_to_whole(a):
    assert grade_project(a, 0) + grade_project(a, 1) + grade_project(a, 2) == a
    for k in range(3):
        assert grade_project(grade_project(a, k), k) == grade_project(a, k)
    assert grade_project(a, 3) == Multivector2(0.0, 0.0, 0.0, 0.0)
    assert a[1] == grade_project(a, 1)


def test_batched_components(rng):
    x = rng.normal(size=(4, 50))
    y = rng.normal(size=(4, 50))
    prod = mv_product(Multivector2(*x), Multivector2(*y))
    for n in (0, 17, 49):
        one = mv_product(Multivector2(*x[:, n]), Multivector2(*y[:, n]))
        np.testing.assert_allclose([c[n] for c in prod.components()], one.components(), atol=1e-14)


def test_isfinite():
    assert ONE.isfinite()
    assert not Multivector2(0.0, np.nan, 0.0, 0.0).isfinite()


def test_scalar_coercion():
    assert 2 * E1 == vector(2.0, 0.0)
    assert E1 * 2 == vector(2.0, 0.0)
    assert ga2._coerce(3.0) == 3 * ONE


def test_j_rotate_rejects_bad_shape():
    with pytest.raises(ValueError):
        j_rotate(np.zeros(3))
