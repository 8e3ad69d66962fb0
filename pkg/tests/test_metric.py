import numpy as np
import pytest
import sympy as sp
from hypothesis import assume, given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from planimm.field import Grid2, curl, differential_field, dual_map, jacobian_det
from planimm.maps import MAPS, get_map
from planimm.metric import (
    DefectiveMatrix, Metric2, MetricField, char_data_from_prescription, eigendecompose,
    induced_metric, metric_from_eigendata, verify_lemma1,
)

mats = arrays(np.float64, (2, 2), elements=st.floats(-10, 10))


def well_separated(m):
    t, d = np.trace(m), np.linalg.det(m)
    return abs(t * t - 4 * d) > 1e-3 * (1 + np.abs(m).max()) ** 2


@given(mats)
def test_eigendecomposition_reconstructs(m):
    assume(well_separated(m))
    e = eigendecompose(m)
    np.testing.assert_allclose(e.reconstruct(), m, atol=1e-9 * (1 + np.abs(m).max()))
    np.testing.assert_allclose(e.omega @ e.f, np.eye(2), atol=1e-9)
    for k in range(2):
        np.testing.assert_allclose(m @ e.f[:, k], e.lambdas[k] * e.f[:, k], atol=1e-9 * (1 + np.abs(m).max()))
    key = [(z.real, z.imag) for z in e.lambdas]
    assert key == sorted(key)


@given(mats)
def test_metric_expansion_is_gram_matrix(m):
    # For M = d(J phi) = R d(phi) with R orthogonal, M^T M is the induced metric.
    assume(well_separated(m) and abs(np.linalg.det(m)) > 1e-3)
    g = metric_from_eigendata(eigendecompose(m))
    np.testing.assert_allclose(g.matrix(), m.T @ m, atol=1e-8 * (1 + np.abs(m).max()) ** 2)


def test_identity_example_eigendata():
    m = np.array([[0.0, 1.0], [-1.0, 0.0]])  # d(J phi) for phi = identity
    e = eigendecompose(m)
    assert e.lambda1 == -1j and e.lambda2 == 1j
    np.testing.assert_allclose(e.f2, [-1j, 1])
    np.testing.assert_allclose(e.f1, [1j, 1])
    np.testing.assert_allclose(e.omega2, [0.5j, 0.5])
    np.testing.assert_allclose(metric_from_eigendata(e).matrix(), np.eye(2), atol=1e-15)


def test_symbolic_eigenvalues_oracle():
    a, b, c, d = 1.5, -2.0, 0.75, 0.25
    lam = sp.Matrix([[a, b], [c, d]]).eigenvals()
    expect = sorted((complex(z) for z in lam), key=lambda z: (z.real, z.imag))
    np.testing.assert_allclose(eigendecompose([[a, b], [c, d]]).lambdas, expect, atol=1e-14)


def test_defective_and_scalar_matrices():
    e = eigendecompose([[2.0, 1.0], [0.0, 2.0]])
    assert e.defective
    with pytest.raises(DefectiveMatrix):
        metric_from_eigendata(e)
    s = eigendecompose([[3.0, 0.0], [0.0, 3.0]])
    assert not s.defective
    np.testing.assert_allclose(metric_from_eigendata(s).matrix(), 9 * np.eye(2))


def test_char_roots_match_eigenvalues(grid33):
    f = get_map("sinusoidal", amplitude=0.1).sample(grid33)
    cd = char_data_from_prescription(jacobian_det(f), curl(f))
    lo, hi = cd.roots()
    dj = differential_field(dual_map(f))
    for node in ((1, 1), (16, 5), (32, 32)):
        e = eigendecompose(dj[node])
        np.testing.assert_allclose([lo[node], hi[node]], e.lambdas, atol=1e-12)
    assert not cd.degenerate.any()


@pytest.mark.parametrize("name", sorted(MAPS))
def test_induced_metric_positive_definite(name, grid33):
    g = induced_metric(MAPS[name]().sample(grid33))
    assert g.is_positive_definite()
    d = differential_field(MAPS[name]().sample(grid33))
    np.testing.assert_allclose(g.tensors(), np.einsum("...ki,...kj->...ij", d, d), atol=1e-13)


def test_metric_field_roundtrip(tmp_path, grid33):
    g = induced_metric(get_map("shear").sample(grid33))
    g.save(tmp_path / "g.field")
    np.testing.assert_array_equal(MetricField.load(tmp_path / "g.field").values, g.values)
    assert Metric2.from_matrix(g.at((3, 4)).matrix()) == g.at((3, 4))
    c = MetricField.constant(Grid2.square(5), 2.0, 0.5, 1.0)
    assert c.values.shape == (5, 5, 3)


@pytest.mark.parametrize("amplitude", [0.05, 0.1])
def test_metric_expansion_sinusoidal(amplitude):
    r = verify_lemma1(get_map("sinusoidal", amplitude=amplitude).sample(Grid2.square(33)))
    assert r.ok and r.max_discrepancy < 1e-10 and r.max_char_discrepancy < 1e-12


def test_metric_expansion_exact_for_affine_map(grid33):
    r = verify_lemma1(get_map("rotation", theta=0.7).sample(grid33))
    assert r.ok and r.max_discrepancy < 1e-10
