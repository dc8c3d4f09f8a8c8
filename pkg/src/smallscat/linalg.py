"""Dense and Krylov solves with condition and residual reporting."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .errors import SolverError

logger = logging.getLogger(__name__)

MAX_CONDITION = 1e12


@dataclass
class SolveReport:
    condition: float
    residual: float
    method: str
    iterations: int = 0


def condition_estimate(lu_piv, anorm: float) -> float:
    lu, _ = lu_piv
    gecon = scipy.linalg.get_lapack_funcs("gecon", (lu,))
    rcond, info = gecon(lu, anorm, norm="1")
    if info != 0 or rcond == 0.0:
        return np.inf
    return 1.0 / rcond


def lu_factor(matrix: np.ndarray, what: str, max_condition: float = MAX_CONDITION):
    """LU factorisation that refuses numerically singular matrices."""
    try:
        lu = scipy.linalg.lu_factor(matrix, check_finite=True)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise SolverError(f"{what}: factorisation failed ({exc})") from exc
    cond = condition_estimate(lu, float(np.abs(matrix).sum(axis=0).max()))
    if not cond < max_condition:
        raise SolverError(f"{what}: matrix is ill-conditioned (condition estimate {cond:.3e})", condition=cond)
    return lu, cond


def solve_dense(matrix: np.ndarray, rhs: np.ndarray, what: str = "linear system",
                max_condition: float = MAX_CONDITION):
    """Solve ``matrix @ x = rhs`` by LU; return ``(x, SolveReport)``."""
    lu, cond = lu_factor(matrix, what, max_condition)
    x = scipy.linalg.lu_solve(lu, rhs)
    res = np.linalg.norm(matrix @ x - rhs) / max(np.linalg.norm(rhs), np.finfo(float).tiny)
    logger.debug("%s: n=%d cond=%.3e residual=%.3e", what, len(matrix), cond, res)
    return x, SolveReport(condition=cond, residual=float(res), method="lu")


def solve_krylov(matvec, rhs: np.ndarray, what: str = "linear system", tol: float = 1e-10,
                 restart: int = 200, maxiter: int = 50, x0=None):
    """Unpreconditioned restarted GMRES on a matrix-free operator."""
    n = len(rhs)
    op = scipy.sparse.linalg.LinearOperator((n, n), matvec=matvec, dtype=complex)
    count = [0]

    def cb(_):
        count[0] += 1

    x, info = scipy.sparse.linalg.gmres(op, rhs, x0=x0, rtol=tol, atol=0.0, restart=restart,
                                        maxiter=maxiter, callback=cb, callback_type="pr_norm")
    res = np.linalg.norm(matvec(x) - rhs) / max(np.linalg.norm(rhs), np.finfo(float).tiny)
    if info != 0 and res > 10 * tol:
        raise SolverError(f"{what}: GMRES did not converge (residual {res:.3e})", residual=res)
    return x, SolveReport(condition=float("nan"), residual=float(res), method="gmres", iterations=count[0])
