"""Recover a map from prescribed Jacobian determinant, curl, and boundary values.

The unknowns are the interior node values; boundary nodes are fixed to the
prescribed data.  The residual stacks ``Jac(f) - jac_target`` and
``curl(f) - curl_target`` and is minimized by Levenberg-Marquardt damped
Gauss-Newton with an analytically assembled sparse Jacobian.

By default the residual is taken over *all* nodes, boundary nodes included.
With central differences the interior-only system splits into two
sublattices (``i + j`` even/odd) that never see each other; on grids with an
odd number of interior nodes one of them has two more unknowns than
equations, so the discrete problem is not locally unique.  The one-sided
stencils on the boundary rows couple the sublattices and restore full rank.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from planimm.boundary import BoundaryData
from planimm.compat import CompatReport, IncompatiblePrescription, compatibility_defect
from planimm.field import (
    IMMERSION_THRESHOLD,
    Grid2,
    MapField,
    NotAnImmersion,
    ScalarField,
    curl,
    derivative_matrix,
    differential_field,
    jacobian_det,
    min_abs_det,
)

__all__ = [
    "Prescription",
    "SolverConfig",
    "SolveReport",
    "UniquenessReport",
    "BoundaryMismatch",
    "residual",
    "residual_jacobian",
    "solve",
    "random_start",
    "uniqueness_experiment",
    "sup_distance",
]

BOUNDARY_TOL = 1e-12


class BoundaryMismatch(ValueError):
    """A candidate map does not carry the prescribed boundary values."""


@dataclass(frozen=True, eq=False)
class Prescription:
    jac_target: ScalarField
    curl_target: ScalarField
    boundary: BoundaryData

    def __post_init__(self):
        if not (self.jac_target.grid == self.curl_target.grid == self.boundary.grid):
            raise ValueError("prescription fields live on different grids")

    @property
    def grid(self) -> Grid2:
        return self.jac_target.grid

    @classmethod
    def from_field(cls, f: MapField) -> Prescription:
        """Targets computed from ``f`` with the package's own discrete operators."""
        return cls(jacobian_det(f), curl(f), BoundaryData.from_field(f))

    @classmethod
    def from_map(cls, analytic, grid: Grid2) -> Prescription:
        return cls.from_field(analytic.sample(grid))

    def compatibility(self) -> CompatReport:
        return compatibility_defect(self.curl_target, self.boundary)

    def min_abs_jac(self) -> float:
        return float(np.abs(self.jac_target.values).min())


@dataclass
class SolverConfig:
    max_iter: int = 200
    tol_residual: float = 1e-10
    tol_step: float = 1e-12
    lambda0: float = 1e-3
    lambda_factor: float = 10.0
    lambda_max: float = 1e12
    compat_rel_tol: float = 1e-6
    residual_nodes: str = "all"  # or "interior"

    def __post_init__(self):
        if self.residual_nodes not in ("all", "interior"):
            raise ValueError("residual_nodes must be 'all' or 'interior'")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        if min(self.tol_residual, self.tol_step, self.lambda0) <= 0 or self.lambda_factor <= 1:
            raise ValueError("tolerances and lambda0 must be positive, lambda_factor > 1")


def _rows(grid: Grid2, nodes: str) -> np.ndarray:
    if nodes == "all":
        return np.ones(grid.nx * grid.ny, dtype=bool)
    return ~grid.boundary_mask().ravel()


def residual(f: MapField, p: Prescription, nodes: str = "all") -> np.ndarray:
    """``[Jac(f) - jac_target, curl(f) - curl_target]`` over the selected nodes."""
    if f.grid != p.grid:
        raise ValueError("map and prescription live on different grids")
    if p.boundary.mismatch(f) > BOUNDARY_TOL:
        raise BoundaryMismatch(f"map deviates from the prescribed boundary by {p.boundary.mismatch(f):.3e}")
    rows = _rows(f.grid, nodes)
    rj = (jacobian_det(f).values - p.jac_target.values).ravel()[rows]
    rc = (curl(f).values - p.curl_target.values).ravel()[rows]
    return np.concatenate([rj, rc])


def _operators(grid: Grid2):
    Dx = sp.kron(derivative_matrix(grid.nx, grid.hx), sp.identity(grid.ny), format="csr")
    Dy = sp.kron(sp.identity(grid.nx), derivative_matrix(grid.ny, grid.hy), format="csr")
    return Dx, Dy


def residual_jacobian(f: MapField, nodes: str = "all", operators=None) -> sp.csr_matrix:
    """Sparse derivative of :func:`residual` with respect to the interior unknowns.

    Columns are ordered ``[u at interior nodes, v at interior nodes]``.
    """
    grid = f.grid
    Dx, Dy = operators or _operators(grid)
    d = differential_field(f)
    a, b, c, e = (d[..., k, l].ravel() for k, l in ((0, 0), (0, 1), (1, 0), (1, 1)))
    rows = _rows(grid, nodes)
    cols = ~grid.boundary_mask().ravel()
    Dx_r, Dy_r = Dx[rows][:, cols], Dy[rows][:, cols]
    diag = lambda w: sp.diags(w[rows])  # noqa: E731
    # Jac = u_x v_y - u_y v_x,  curl = v_x - u_y
    jac_u = diag(e) @ Dx_r - diag(c) @ Dy_r
    jac_v = diag(a) @ Dy_r - diag(b) @ Dx_r
    return sp.vstack([sp.hstack([jac_u, jac_v]), sp.hstack([-Dy_r, Dx_r])]).tocsr()


def _pack(f: MapField) -> np.ndarray:
    interior = ~f.grid.boundary_mask()
    return np.concatenate([f.values[..., 0][interior], f.values[..., 1][interior]])


def _unpack(x: np.ndarray, like: MapField) -> MapField:
    interior = ~like.grid.boundary_mask()
    values = np.array(like.values)
    m = interior.sum()
    values[..., 0][interior] = x[:m]
    values[..., 1][interior] = x[m:]
    return MapField(like.grid, values)


@dataclass
class SolveReport:
    converged: bool
    iterations: int
    residual_norm: float
    residual_max: float
    history: list = field(default_factory=list)
    message: str = ""
    solution: MapField | None = field(default=None, repr=False)
    immersion_flags: int = 0  # trial steps rejected because they folded the map

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("solution")
        return d


def solve(p: Prescription, init: MapField, config: SolverConfig | None = None) -> SolveReport:
    """Levenberg-Marquardt solve of the prescribed Jacobian/curl/boundary problem.

    Steps are accepted only if they lower the residual norm and keep
    ``min |det d phi|`` above the immersion threshold; rejected steps raise the
    damping.  The report is returned whether or not the iteration converged.
    """
    cfg = config or SolverConfig()
    compat = p.compatibility()
    if not compat.ok(cfg.compat_rel_tol):
        raise IncompatiblePrescription(
            f"curl and boundary data are incompatible (relative defect {compat.relative_defect:.3e})")
    if p.boundary.mismatch(init) > BOUNDARY_TOL:
        raise BoundaryMismatch("initial guess does not carry the prescribed boundary values")
    if min_abs_det(init) < IMMERSION_THRESHOLD:
        raise NotAnImmersion("initial guess is not an immersion")

    ops = _operators(p.grid)
    f = init
    x = _pack(f)
    r = residual(f, p, cfg.residual_nodes)
    cost = 0.5 * float(r @ r)
    lam = cfg.lambda0
    history = [{"iteration": 0, "residual_norm": float(np.sqrt(2 * cost)),
                "residual_max": float(np.abs(r).max()), "lambda": lam, "step_norm": 0.0}]
    flags = 0
    message = "iteration limit reached"
    converged = False
    it = 0

    while it < cfg.max_iter:
        if np.abs(r).max() < cfg.tol_residual:
            converged, message = True, "residual below tolerance"
            break
        it += 1
        Jm = residual_jacobian(f, cfg.residual_nodes, ops)
        A = (Jm.T @ Jm).tocsc()
        g = Jm.T @ r
        scale = A.diagonal()
        scale = np.where(scale > 0, scale, 1.0)
        accepted = False
        while lam <= cfg.lambda_max:
            step = spsolve(A + sp.diags(lam * scale, format="csc"), -g)
            trial = _unpack(x + step, f)
            if min_abs_det(trial) < IMMERSION_THRESHOLD:
                flags += 1
                lam *= cfg.lambda_factor
                continue
            r_trial = residual(trial, p, cfg.residual_nodes)
            cost_trial = 0.5 * float(r_trial @ r_trial)
            if cost_trial < cost:
                accepted = True
                break
            lam *= cfg.lambda_factor
        if not accepted:
            message = ("damping limit reached while avoiding loss of immersion"
                       if flags else "damping limit reached without decrease")
            break
        rel_step = float(np.linalg.norm(step) / max(np.linalg.norm(x), 1e-300))
        x, f, r, cost = x + step, trial, r_trial, cost_trial
        lam = max(lam / cfg.lambda_factor, 1e-300)
        history.append({"iteration": it, "residual_norm": float(np.sqrt(2 * cost)),
                        "residual_max": float(np.abs(r).max()), "lambda": lam,
                        "step_norm": float(np.linalg.norm(step))})
        if np.abs(r).max() < cfg.tol_residual:
            converged, message = True, "residual below tolerance"
            break
        if rel_step < cfg.tol_step:
            converged, message = True, "relative step below tolerance"
            break

    return SolveReport(
        converged=converged,
        iterations=it,
        residual_norm=float(np.sqrt(2 * cost)),
        residual_max=float(np.abs(r).max()),
        history=history,
        message=message,
        solution=f,
        immersion_flags=flags,
    )


def random_start(boundary: BoundaryData, sigma: float, rng: np.random.Generator,
                 modes: int = 3) -> MapField:
    """Boundary blend plus a smooth interior perturbation with sup norm ``sigma``.

    The perturbation is a sum of ``sin(m pi s) sin(n pi t)`` modes with
    ``m, n <= modes`` and coefficients decaying like ``1/(m n)``, so it
    vanishes on the boundary.
    """
    blend = boundary.blend()
    if sigma == 0:
        return blend
    g = boundary.grid
    s = (g.x - g.x0) / (g.x1 - g.x0)
    t = (g.y - g.y0) / (g.y1 - g.y0)
    k = np.arange(1, modes + 1)
    Sx = np.sin(np.pi * np.outer(k, s))  # (modes, nx)
    Sy = np.sin(np.pi * np.outer(k, t))
    pert = np.empty((*g.shape, 2))
    for comp in range(2):
        coef = rng.standard_normal((modes, modes)) / np.outer(k, k)
        field_ = Sx.T @ coef @ Sy
        peak = np.abs(field_).max()
        pert[..., comp] = sigma * field_ / peak if peak > 0 else 0.0
    return MapField(g, boundary.apply(blend.values + pert))


def sup_distance(a: MapField, b: MapField) -> float:
    return float(np.linalg.norm(a.values - b.values, axis=-1).max())


@dataclass
class UniquenessReport:
    reports: list
    distances: np.ndarray = field(repr=False)
    sigma: float = 0.0
    seed: int = 0

    @property
    def converged(self) -> list[int]:
        return [k for k, r in enumerate(self.reports) if r.converged]

    @property
    def n_converged(self) -> int:
        return len(self.converged)

    @property
    def inconclusive(self) -> bool:
        return self.n_converged < 2

    @property
    def max_distance(self) -> float:
        idx = self.converged
        if len(idx) < 2:
            return float("nan")
        return float(np.max(self.distances[np.ix_(idx, idx)]))

    def to_dict(self) -> dict:
        dist = [[None if not np.isfinite(v) else float(v) for v in row] for row in self.distances]
        return {
            "n_starts": len(self.reports),
            "n_converged": self.n_converged,
            "inconclusive": self.inconclusive,
            "max_pairwise_distance": None if self.inconclusive else self.max_distance,
            "sigma": self.sigma,
            "seed": self.seed,
            "distances": dist,
            "starts": [r.to_dict() for r in self.reports],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _run_start(p, boundary, sigma, seq, cfg):
    rng = np.random.default_rng(seq)
    init = random_start(boundary, sigma, rng)
    try:
        return solve(p, init, cfg)
    except NotAnImmersion as exc:
        return SolveReport(False, 0, float("nan"), float("nan"), message=f"start rejected: {exc}")


def uniqueness_experiment(p: Prescription, n_starts: int, sigma: float, seed: int,
                          config: SolverConfig | None = None, threads: int = 1) -> UniquenessReport:
    """Solve from ``n_starts`` perturbed boundary blends and compare the solutions.

    Start ``k`` draws its perturbation from the ``k``-th child of
    ``SeedSequence(seed)``, so results do not depend on ``threads``.
    """
    if n_starts < 2:
        raise ValueError("need at least two starts")
    cfg = config or SolverConfig()
    seqs = np.random.SeedSequence(seed).spawn(n_starts)
    run = lambda s: _run_start(p, p.boundary, sigma, s, cfg)  # noqa: E731
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(run, seqs))
    else:
        reports = [run(s) for s in seqs]
    dist = np.full((n_starts, n_starts), np.nan)
    for a in range(n_starts):
        for b in range(a, n_starts):
            ra, rb = reports[a], reports[b]
            if ra.converged and rb.converged:
                dist[a, b] = dist[b, a] = 0.0 if a == b else sup_distance(ra.solution, rb.solution)
    return UniquenessReport(reports, dist, sigma, seed)
