"""Implicit step for the degree of orientation.

Backward Euler on the s-part of the energy with the orientation frozen:
the stiffness and ring terms are quadratic in s and taken implicitly, psi_c
is implicit through its linearization, psi_e is explicit. Couplings add a
nodal diagonal and a right-hand side through the lumped mass.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from apps.energy.model import EnergyModel
from apps.fem.operators import SparseSymOperator, eliminate_dirichlet, expand_solution
from apps.fem.solvers import cg_solve
from apps.fields.fields import BoundaryData, admissible_range

from .config import FlowConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class DegreeUpdate:
    s: np.ndarray
    ds_norm: float
    iterations: int
    clamped_nodes: int = 0
    newton_corrected: bool = False


def _assemble(
    model: EnergyModel,
    s_old: np.ndarray,
    linearize_at: np.ndarray,
    n: np.ndarray,
    dt: float,
):
    m = model.mass.weights
    well = model.well
    w = well.bulk_weight
    d2c = well.d2psi_c(linearize_at)
    diag = m / dt + 0.5 * model.ring_node_sums(n) + w * m * d2c
    rhs = m * s_old / dt - w * m * (well.dpsi_c(linearize_at) - d2c * linearize_at - well.dpsi_e(s_old))
    coupling_diag, coupling_rhs = model.coupling_s_terms(n)
    diag = diag + m * coupling_diag
    rhs = rhs + m * coupling_rhs
    matrix = model.kappa * model.stiffness + sp.diags(diag)
    return SparseSymOperator.from_matrix(matrix, check=False), rhs


def _solve(op: SparseSymOperator, rhs: np.ndarray, boundary: BoundaryData, config: FlowConfig, x0: Optional[np.ndarray]):
    fixed = boundary.degree_nodes
    reduced, reduced_rhs, free = eliminate_dirichlet(op, rhs, fixed, boundary.degree_values)
    result = cg_solve(
        reduced,
        reduced_rhs,
        tol=config.cg_tol,
        max_iter=config.cg_max_iter,
        x0=None if x0 is None else x0[free],
    )
    return expand_solution(op.dimension, free, result.x, fixed, boundary.degree_values), result.iterations


def s_step(
    model: EnergyModel,
    s_old: np.ndarray,
    n: np.ndarray,
    boundary: BoundaryData,
    config: FlowConfig,
) -> DegreeUpdate:
    s_old = np.asarray(s_old, dtype=float)
    n = np.asarray(n, dtype=float)
    op, rhs = _assemble(model, s_old, s_old, n, config.dt)
    s_new, iterations = _solve(op, rhs, boundary, config, s_old)

    corrected = False
    if not model.well.convex_is_quadratic:
        logger.warning("psi_c is not quadratic; applying one Newton correction to the s-step.")
        op, rhs = _assemble(model, s_old, s_new, n, config.dt)
        s_new, more = _solve(op, rhs, boundary, config, s_new)
        iterations += more
        corrected = True

    lo, hi = admissible_range(model.model, model.dim)
    clipped = np.clip(s_new, lo, hi)
    changed = int(np.count_nonzero(clipped != s_new))
    if changed:
        logger.warning("Clamped s into [%g, %g] at %d nodes.", lo, hi, changed)
    # Prescribed values stay bit-identical.
    clipped[boundary.degree_nodes] = boundary.degree_values
    ds_norm = model.mass.norm(clipped - s_old)
    return DegreeUpdate(s=clipped, ds_norm=ds_norm, iterations=iterations, clamped_nodes=changed, newton_corrected=corrected)
