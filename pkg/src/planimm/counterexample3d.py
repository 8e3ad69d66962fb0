"""Two affine maps of R^3 with equal Jacobian determinant and curl but different metrics."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

__all__ = ["AffineMap3", "run_counterexample", "CounterexampleReport", "PHI", "PSI"]


@dataclass(frozen=True, eq=False)
class AffineMap3:
    """``x -> A x + b``; ``A[k, j]`` is the derivative of component k along x_j."""

    A: np.ndarray
    b: np.ndarray = np.zeros(3)
    name: str = ""

    def jacobian_det(self) -> float:
        A = self.A
        return float(A[0, 0] * (A[1, 1] * A[2, 2] - A[1, 2] * A[2, 1])
                     - A[0, 1] * (A[1, 0] * A[2, 2] - A[1, 2] * A[2, 0])
                     + A[0, 2] * (A[1, 0] * A[2, 1] - A[1, 1] * A[2, 0]))

    def curl(self) -> np.ndarray:
        A = self.A
        return np.array([A[2, 1] - A[1, 2], A[0, 2] - A[2, 0], A[1, 0] - A[0, 1]])

    def metric(self) -> np.ndarray:
        return self.A.T @ self.A


# phi(x, y, z) = (y, z, x),  psi(x, y, z) = (y - x, z, x)
PHI = AffineMap3(np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]), name="phi")
PSI = AffineMap3(np.array([[-1.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]), name="psi")

EXPECTED_CURL = np.array([-1.0, -1.0, -1.0])
EXPECTED_PHI_METRIC = np.eye(3)
EXPECTED_PSI_METRIC = np.array([[2.0, -1.0, 0.0], [-1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])


@dataclass
class CounterexampleReport:
    jac_phi: float
    jac_psi: float
    curl_phi: np.ndarray
    curl_psi: np.ndarray
    metric_phi: np.ndarray
    metric_psi: np.ndarray
    checks: dict

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict:
        return {
            "jac_phi": self.jac_phi,
            "jac_psi": self.jac_psi,
            "curl_phi": self.curl_phi.tolist(),
            "curl_psi": self.curl_psi.tolist(),
            "metric_phi": self.metric_phi.tolist(),
            "metric_psi": self.metric_psi.tolist(),
            "checks": self.checks,
            "ok": self.ok,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def table(self) -> str:
        width = max(map(len, self.checks))
        return "\n".join(f"{name:<{width}}  {'PASS' if passed else 'FAIL'}"
                         for name, passed in self.checks.items())


def run_counterexample() -> CounterexampleReport:
    """Evaluate both maps; every comparison is exact."""
    jp, js = PHI.jacobian_det(), PSI.jacobian_det()
    cp, cs = PHI.curl(), PSI.curl()
    gp, gs = PHI.metric(), PSI.metric()
    checks = {
        "jac phi == 1": jp == 1.0,
        "jac psi == 1": js == 1.0,
        "curl phi == (-1,-1,-1)": bool(np.array_equal(cp, EXPECTED_CURL)),
        "curl psi == (-1,-1,-1)": bool(np.array_equal(cs, EXPECTED_CURL)),
        "metric phi == dx^2+dy^2+dz^2": bool(np.array_equal(gp, EXPECTED_PHI_METRIC)),
        "metric psi == 2dx^2-2dxdy+dy^2+dz^2": bool(np.array_equal(gs, EXPECTED_PSI_METRIC)),
        "metrics differ": not np.array_equal(gp, gs),
    }
    return CounterexampleReport(jp, js, cp, cs, gp, gs, checks)
