"""Jacobi-preconditioned conjugate gradients for the SPD systems of the flows."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Union

import numpy as np
import scipy.sparse as sp

from apps.core.exceptions import NonFiniteError, SolverError

from .operators import SparseSymOperator

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10


@dataclass
class CGResult:
    x: np.ndarray
    iterations: int
    residual_history: List[float] = field(default_factory=list)
    energy_history: List[float] = field(default_factory=list)

    @property
    def relative_residual(self) -> float:
        return self.residual_history[-1] if self.residual_history else 0.0


def cg_solve(
    A: Union[SparseSymOperator, sp.spmatrix, np.ndarray],
    b: np.ndarray,
    tol: float = DEFAULT_TOL,
    max_iter: Optional[int] = None,
    x0: Optional[np.ndarray] = None,
    record_energy: bool = False,
) -> CGResult:
    """Solve A x = b until ||A x - b|| <= tol ||b||.

    ``residual_history`` holds relative residual norms. With
    ``record_energy`` the quadratic 1/2 x^T A x - b^T x is logged every
    iteration; it is nonincreasing for SPD A.

    Raises:
        SolverError: non-positive diagonal, breakdown, or ``max_iter`` reached.
        NonFiniteError: NaN or inf in the data or the iterates.
    """
    mat = A.matrix if isinstance(A, SparseSymOperator) else A
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    if mat.shape != (n, n):
        raise ValueError(f"Operator shape {mat.shape} does not match right-hand side of length {n}.")
    if not np.all(np.isfinite(b)):
        raise NonFiniteError("Right-hand side contains non-finite values.")
    if max_iter is None:
        max_iter = max(10 * n, 50)

    diag = mat.diagonal() if sp.issparse(mat) else np.diag(mat)
    if n and np.any(diag <= 0.0):
        bad = int(np.flatnonzero(diag <= 0.0)[0])
        raise SolverError(f"Operator is not SPD: diagonal entry {bad} is {diag[bad]!r}.")
    inv_diag = 1.0 / diag

    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    b_norm = float(np.linalg.norm(b))
    result = CGResult(x=x, iterations=0)
    if b_norm == 0.0:
        result.x = np.zeros(n)
        result.residual_history.append(0.0)
        return result

    r = b - mat @ x
    z = inv_diag * r
    p = z.copy()
    rz = float(np.dot(r, z))
    res = float(np.linalg.norm(r)) / b_norm
    result.residual_history.append(res)
    if record_energy:
        result.energy_history.append(0.5 * float(np.dot(x, mat @ x)) - float(np.dot(b, x)))

    k = 0
    while res > tol:
        if k >= max_iter:
            raise SolverError(
                f"CG did not reach {tol:g} in {max_iter} iterations (relative residual {res:.3e}).",
                residual_history=result.residual_history,
            )
        Ap = mat @ p
        pAp = float(np.dot(p, Ap))
        if not np.isfinite(pAp):
            raise NonFiniteError(f"Non-finite curvature at CG iteration {k}.")
        if pAp <= 0.0:
            raise SolverError(
                f"CG breakdown at iteration {k}: p^T A p = {pAp!r}; operator is not positive definite.",
                residual_history=result.residual_history,
            )
        alpha = rz / pAp
        x = x + alpha * p
        r = r - alpha * Ap
        z = inv_diag * r
        rz_next = float(np.dot(r, z))
        p = z + (rz_next / rz) * p
        rz = rz_next
        k += 1
        res = float(np.linalg.norm(r)) / b_norm
        if not np.isfinite(res):
            raise NonFiniteError(f"Non-finite residual at CG iteration {k}.")
        result.residual_history.append(res)
        if record_energy:
            result.energy_history.append(0.5 * float(np.dot(x, mat @ x)) - float(np.dot(b, x)))

    result.x = x
    result.iterations = k
    logger.debug("CG converged in %d iterations (relative residual %.3e).", k, res)
    return result
