import dataclasses

import numpy as np
import pytest

from planimm.compat import IncompatiblePrescription
from planimm.field import Grid2, MapField, NotAnImmersion, ScalarField
from planimm.maps import get_map
from planimm.solver import (
    BoundaryMismatch, Prescription, SolverConfig, _pack, _unpack, random_start, residual,
    residual_jacobian, solve, sup_distance, uniqueness_experiment,
)


def identity_interior(p):
    return MapField(p.grid, p.boundary.apply(get_map("identity").sample(p.grid).values))


@pytest.mark.parametrize("nodes", ["all", "interior"])
def test_jacobian_matches_finite_differences(nodes, rng):
    grid = Grid2(7, 8)
    p = Prescription.from_map(get_map("shear", k=0.3), grid)
    f = random_start(p.boundary, 0.1, rng)
    J = residual_jacobian(f, nodes).toarray()
    x0 = _pack(f)
    eps = 1e-6
    fd = np.empty_like(J)
    for k in range(x0.size):
        dx = np.zeros_like(x0)
        dx[k] = eps
        fd[:, k] = (residual(_unpack(x0 + dx, f), p, nodes) - residual(_unpack(x0 - dx, f), p, nodes)) / (2 * eps)
    np.testing.assert_allclose(J, fd, atol=1e-7)


@pytest.mark.parametrize("n", [7, 9, 17])
def test_interior_residual_is_rank_deficient(n):
    # Central differences decouple even and odd sublattices, so interior equations
    # alone leave a two-dimensional null space; boundary rows remove it.
    f = get_map("sinusoidal", amplitude=0.05).sample(Grid2.square(n))
    s_int = np.linalg.svd(residual_jacobian(f, "interior").toarray(), compute_uv=False)
    s_all = np.linalg.svd(residual_jacobian(f, "all").toarray(), compute_uv=False)
    assert np.sum(s_int < 1e-10 * s_int[0]) == 2
    assert s_all[-1] > 1.0


def test_identity_converges_immediately(grid33):
    p = Prescription.from_map(get_map("identity"), grid33)
    r = solve(p, get_map("identity").sample(grid33))
    assert r.converged and r.iterations <= 1
    assert sup_distance(r.solution, get_map("identity").sample(grid33)) == 0.0


def test_rotation_from_identity_interior(grid33):
    m = get_map("rotation", theta=0.4)
    p = Prescription.from_map(m, grid33)
    r = solve(p, identity_interior(p))
    assert r.converged
    assert sup_distance(r.solution, m.sample(grid33)) < 1e-8
    assert r.history[-1]["residual_norm"] < r.history[0]["residual_norm"]


def test_sinusoidal_from_blend(grid33):
    m = get_map("sinusoidal", amplitude=0.05)
    p = Prescription.from_map(m, grid33)
    r = solve(p, p.boundary.blend())
    assert r.converged
    assert sup_distance(r.solution, m.sample(grid33)) < 1e-6
    assert r.immersion_flags == 0


def test_solve_is_deterministic(grid33):
    p = Prescription.from_map(get_map("sinusoidal", amplitude=0.05), grid33)
    a, b = solve(p, p.boundary.blend()), solve(p, p.boundary.blend())
    assert np.array_equal(a.solution.values, b.solution.values)
    assert a.history == b.history


def test_incompatible_prescription_rejected(grid33):
    f = get_map("identity").sample(grid33)
    p = Prescription.from_field(f)
    bad = dataclasses.replace(p, curl_target=ScalarField(grid33, np.ones(grid33.shape)))
    assert abs(bad.compatibility().defect - 1.0) < 1e-10
    with pytest.raises(IncompatiblePrescription):
        solve(bad, f)


def test_boundary_mismatch_and_folded_start(grid33):
    p = Prescription.from_map(get_map("rotation", theta=0.4), grid33)
    with pytest.raises(BoundaryMismatch):
        solve(p, get_map("identity").sample(grid33))
    flat = p.boundary.apply(np.zeros((33, 33, 2)))
    with pytest.raises(NotAnImmersion):
        solve(p, MapField(grid33, flat))


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(residual_nodes="edges")
    with pytest.raises(ValueError):
        SolverConfig(max_iter=0)


def test_random_start_keeps_boundary_and_scale(rng, grid33):
    p = Prescription.from_map(get_map("sinusoidal", amplitude=0.05), grid33)
    f = random_start(p.boundary, 0.1, rng)
    assert p.boundary.mismatch(f) == 0.0
    dev = f.values - p.boundary.blend().values
    np.testing.assert_allclose(np.abs(dev).max(axis=(0, 1)), 0.1, rtol=1e-12)


def test_uniqueness_rotation_small():
    p = Prescription.from_map(get_map("rotation", theta=0.4), Grid2.square(33))
    rep = uniqueness_experiment(p, 5, 0.05, seed=3)
    assert rep.n_converged == 5 and not rep.inconclusive
    assert rep.max_distance < 1e-8
    again = uniqueness_experiment(p, 5, 0.05, seed=3, threads=2)
    assert again.distances.tolist() == rep.distances.tolist()


def test_residual_examples(grid33):
    ident = get_map("identity").sample(grid33)
    rot = get_map("rotation", theta=0.3).sample(grid33)
    n_int = 31 * 31
    assert residual(ident, Prescription.from_field(ident), "interior").shape == (2 * n_int,)
    assert np.abs(residual(ident, Prescription.from_field(ident))).max() == 0.0
    assert np.abs(residual(rot, Prescription.from_field(rot), "interior")).max() < 1e-13
    # curl target 2 sin(0.3) against the identity map: curl residual is -2 sin(0.3) everywhere
    ones = ScalarField(grid33, np.ones(grid33.shape))
    p = Prescription(ones, ScalarField(grid33, np.full(grid33.shape, 2 * np.sin(0.3))),
                     Prescription.from_field(ident).boundary)
    r = residual(ident, p, "interior")
    np.testing.assert_allclose(r[:n_int], 0.0, atol=1e-14)
    np.testing.assert_allclose(r[n_int:], -2 * np.sin(0.3), atol=1e-14)
    with pytest.raises(BoundaryMismatch):
        residual(ident, Prescription.from_field(rot))
