"""Dense direct solution of the assembled systems."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .spaces import HpSpace


class SingularSystemError(RuntimeError):
    """System is singular to working precision; carries a condition estimate."""

    def __init__(self, message: str, cond_estimate: float):
        super().__init__(message)
        self.cond_estimate = cond_estimate


@dataclass(frozen=True, eq=False)
class Solution:
    coefficients: np.ndarray
    residual_norm: float        # relative to the load vector
    space: HpSpace | None = None
    config: dict = field(default_factory=dict)


def solve_dense(A, rhs, space: HpSpace | None = None, spd: bool = False,
                config: dict | None = None) -> Solution:
    """Direct solve with a recorded relative residual.

    LU with partial pivoting for the general (non-symmetric) penalized
    system, Cholesky for the conforming SPD path.  A residual above 1e-10
    relative or a failed factorization raises SingularSystemError with a
    1-norm condition estimate.
    """
    A = np.asarray(A, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    if rhs.shape != (A.shape[0],):
        raise ValueError("load vector does not match the matrix")
    try:
        if spd:
            c, low = sla.cho_factor(A)
            x = sla.cho_solve((c, low), rhs)
        else:
            x = sla.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(
            f"factorization failed: {exc} "
            f"(cond estimate {_cond_estimate(A):.3e})",
            _cond_estimate(A)) from exc
    scale = np.linalg.norm(rhs)
    res = float(np.linalg.norm(A @ x - rhs) / scale) if scale > 0 else 0.0
    if res > 1e-10:
        raise SingularSystemError(
            f"relative residual {res:.3e} exceeds 1e-10; system is singular "
            f"to working precision (cond estimate {_cond_estimate(A):.3e})",
            _cond_estimate(A))
    return Solution(coefficients=x, residual_norm=res, space=space,
                    config=dict(config or {}))


def _cond_estimate(A: np.ndarray) -> float:
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            lu, piv = sla.lu_factor(A)
        rcond = sla.lapack.dgecon(lu, np.linalg.norm(A, 1), norm="1")[0]
        return 1.0 / rcond if rcond > 0 else np.inf
    except Exception:
        return np.inf


def evaluate_solution(solution: Solution, points) -> np.ndarray:
    """Point values of the panel-wise expansion at screen points.

    Points on panel interfaces are resolved to the panel that contains
    them first in numbering order; the two one-sided values differ by the
    edge jump.
    """
    space = solution.space
    if space is None:
        raise ValueError("solution carries no space reference")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    mesh = space.mesh
    out = np.empty(len(pts))
    for k, pt in enumerate(pts):
        q = _containing_panel(mesh, pt)
        origin, size = mesh.panel_rect(q)
        ref = (pt - origin) / size
        out[k] = space.eval_on_panel(q, ref[None, :],
                                     solution.coefficients)[0]
    return out if len(out) > 1 else out[:1]


def evaluate_on_panel(solution: Solution, q: int, ref_points) -> np.ndarray:
    """Expansion values on one panel at reference coordinates in [0,1]^2."""
    return solution.space.eval_on_panel(q, np.atleast_2d(ref_points),
                                        solution.coefficients)


def _containing_panel(mesh, pt) -> int:
    for q in range(mesh.num_panels):
        origin, size = mesh.panel_rect(q)
        if np.all(pt >= origin - 1e-12) and np.all(pt <= origin + size + 1e-12):
            return q
    raise ValueError(f"point {pt} lies outside the screen")
