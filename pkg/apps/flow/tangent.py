"""Tangential director updates and the nodal projection.

Both models reduce the constrained update to an SPD system on (d-1) tangent
dofs per free node. The per-node bases come from a Householder reflection
that maps a coordinate axis onto n_i; its remaining columns span n_i^perp.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from apps.core.exceptions import CFLViolation, FieldError
from apps.energy.ericksen import edge_weights
from apps.energy.model import EnergyModel
from apps.fem.operators import SparseSymOperator, free_dofs
from apps.fem.quadrature import p1_squared_cell_integrals
from apps.fem.solvers import cg_solve
from apps.meshes.stiffness import assemble_cell_matrices, local_stiffness

from .config import CFL_REFUSE, FlowConfig

logger = logging.getLogger(__name__)

SINGULAR_TOL = 1e-14
TANGENCY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class TangentUpdate:
    t: np.ndarray
    norm: float
    iterations: int
    regularized_nodes: int = 0


def householder_bases(n: np.ndarray) -> np.ndarray:
    """Orthonormal bases of n_i^perp, shape (N, d, d-1), for unit n_i."""
    n = np.asarray(n, dtype=float)
    N, d = n.shape
    k = np.argmax(np.abs(n), axis=1)
    rows = np.arange(N)
    w = n.copy()
    w[rows, k] += np.where(n[rows, k] >= 0.0, 1.0, -1.0)
    H = np.eye(d)[None] - 2.0 * np.einsum("ni,nj->nij", w, w) / np.einsum("ni,ni->n", w, w)[:, None, None]
    others = np.array([[j for j in range(d) if j != axis] for axis in range(d)])[k]
    return np.take_along_axis(H, others[:, None, :], axis=2)


def _basis_operator(bases: np.ndarray, free: np.ndarray) -> sp.csr_matrix:
    """Sparse map from tangent dofs of the free nodes to full nodal vectors."""
    N, d, m = bases.shape
    node = np.repeat(free, d * m)
    a = np.tile(np.repeat(np.arange(d), m), free.size)
    b = np.tile(np.arange(m), free.size * d)
    col_node = np.repeat(np.arange(free.size), d * m)
    data = bases[free].reshape(-1)
    return sp.csr_matrix((data, (node * d + a, col_node * m + b)), shape=(N * d, free.size * m))


def _node_blocks(matrices: np.ndarray, weights: np.ndarray) -> sp.csr_matrix:
    """Block-diagonal matrix with blocks m_i G_i."""
    N, d, _ = matrices.shape
    nodes = np.arange(N)
    rows = (nodes[:, None, None] * d + np.arange(d)[None, :, None]).repeat(d, axis=2)
    cols = (nodes[:, None, None] * d + np.arange(d)[None, None, :]).repeat(d, axis=1)
    data = weights[:, None, None] * matrices
    return sp.csr_matrix((data.reshape(-1), (rows.reshape(-1), cols.reshape(-1))), shape=(N * d, N * d))


def _psd_part(matrices: np.ndarray) -> np.ndarray:
    """Nodewise projection onto PSD matrices by clipping eigenvalues at zero."""
    sym = 0.5 * (matrices + np.swapaxes(matrices, 1, 2))
    w, V = np.linalg.eigh(sym)
    if w.min(initial=0.0) >= 0.0:
        return sym
    return np.einsum("nij,nj,nkj->nik", V, np.clip(w, 0.0, None), V)


def _solve_tangent(lhs: sp.csr_matrix, rhs: np.ndarray, n: np.ndarray, fixed: np.ndarray, config: FlowConfig):
    N, d = n.shape
    free = free_dofs(N, fixed)
    bases = householder_bases(n)
    T = _basis_operator(bases, free)
    A = SparseSymOperator.from_matrix((T.T @ lhs @ T).tocsr(), check=False)
    b = T.T @ rhs
    result = cg_solve(A, b, tol=config.cg_tol, max_iter=config.cg_max_iter)
    t = (T @ result.x).reshape(N, d)
    t[fixed] = 0.0
    normal = np.abs(np.einsum("ni,ni->n", t, n)).max(initial=0.0)
    if normal > TANGENCY_TOL * max(1.0, float(np.abs(t).max(initial=0.0))):
        raise FieldError(f"Tangent update has a normal component of {normal:.3e}.")
    return t, result.iterations


def erk_tangent_step(
    model: EnergyModel,
    s: np.ndarray,
    n: np.ndarray,
    fixed: Sequence[int],
    config: FlowConfig,
) -> TangentUpdate:
    """Solve (1/tau)[B(t, v) + sigma (t, v)_h] = -B(n, v) for tangential t.

    B is the Hessian of the director part of the energy: the ring term plus
    the couplings' node matrices. The couplings enter the left-hand side
    through their PSD part.
    """
    n = np.asarray(n, dtype=float)
    s = np.asarray(s, dtype=float)
    N, d = n.shape
    fixed = np.asarray(fixed, dtype=np.int64)
    eye = sp.identity(d, format="csr")
    weights = model.mass.weights

    ring = sp.kron(model.graph.weighted_laplacian(edge_weights(model.graph, s)), eye, format="csr")
    exact = ring
    positive = ring
    G = model.coupling_director_matrices(s)
    if G is not None:
        exact = ring + _node_blocks(G, weights)
        positive = ring + _node_blocks(_psd_part(G), weights)

    energy_scale = abs(model.main_energy(s, n))
    sigma = config.sigma_reg * max(1.0, energy_scale)
    diag = positive.diagonal().reshape(N, d).sum(axis=1)
    free_mask = np.ones(N, dtype=bool)
    free_mask[fixed] = False
    singular = int(np.count_nonzero(free_mask & (diag <= SINGULAR_TOL * max(float(diag.max(initial=0.0)), 1.0))))
    if singular:
        logger.warning("Tangent system is singular at %d nodes; regularized with sigma = %.3e.", singular, sigma)
    lhs = (positive + sigma * sp.kron(sp.diags(weights), eye, format="csr")) / config.tau
    rhs = -(exact @ n.reshape(-1))
    t, iterations = _solve_tangent(lhs.tocsr(), rhs, n, fixed, config)
    norm = float(np.sqrt(max(model.mass.inner(t, t), 0.0)))
    return TangentUpdate(t=t, norm=norm, iterations=iterations, regularized_nodes=singular)


def cfl_limit(model: EnergyModel, config: FlowConfig) -> float:
    return config.cfl_constant * model.mesh.max_diameter ** (model.dim / 2.0)


def check_cfl(model: EnergyModel, config: FlowConfig) -> None:
    limit = cfl_limit(model, config)
    if config.dt <= limit:
        return
    message = f"dt = {config.dt:g} exceeds the CFL limit {limit:.3e} (C = {config.cfl_constant:g}, h = {model.mesh.max_diameter:.3e})."
    if config.cfl_mode == CFL_REFUSE:
        raise CFLViolation(message)
    logger.warning("%s Continuing in warn-only mode.", message)


def weighted_h1(model: EnergyModel, s: np.ndarray) -> sp.csr_matrix:
    """Scalar matrix of (t, v)_{H^1_{s^2}}: lumped mass plus s^2-weighted stiffness."""
    mesh = model.mesh
    weight = p1_squared_cell_integrals(mesh, s) / mesh.cell_volumes
    stiff = assemble_cell_matrices(mesh, weight[:, None, None] * local_stiffness(mesh))
    return (sp.diags(model.mass.weights) + stiff).tocsr()


def _line_ring_hessian(model: EnergyModel, s: np.ndarray, n: np.ndarray) -> sp.csr_matrix:
    """Matrix of sum k w (dT_i - dT_j):(V_i - V_j) with dT = n (x) t + t (x) n."""
    graph = model.graph
    N, d = n.shape
    kw = graph.weights * edge_weights(graph, s)
    i, j = graph.edges[:, 0], graph.edges[:, 1]
    eye = np.eye(d)[None]
    nn_i = np.einsum("ea,eb->eab", n[i], n[i])
    nn_j = np.einsum("ea,eb->eab", n[j], n[j])
    dot = np.einsum("ea,ea->e", n[i], n[j])
    # Block (i, j) couples v_i with t_j.
    off_ij = -2.0 * kw[:, None, None] * (dot[:, None, None] * eye + np.einsum("ea,eb->eab", n[j], n[i]))
    off_ji = np.swapaxes(off_ij, 1, 2)
    diag_i = 2.0 * kw[:, None, None] * (eye + nn_i)
    diag_j = 2.0 * kw[:, None, None] * (eye + nn_j)

    a = np.arange(d)
    r = np.repeat(a, d)
    c = np.tile(a, d)

    def triplets(rows_node, cols_node, blocks):
        return (
            (rows_node[:, None] * d + r[None]).reshape(-1),
            (cols_node[:, None] * d + c[None]).reshape(-1),
            blocks.reshape(-1),
        )

    parts = [triplets(i, j, off_ij), triplets(j, i, off_ji), triplets(i, i, diag_i), triplets(j, j, diag_j)]
    rows = np.concatenate([p[0] for p in parts])
    cols = np.concatenate([p[1] for p in parts])
    data = np.concatenate([p[2] for p in parts])
    return sp.csr_matrix((data, (rows, cols)), shape=(N * d, N * d))


def _line_ring_rhs(model: EnergyModel, s: np.ndarray, n: np.ndarray) -> np.ndarray:
    """-delta_Theta E[n (x) v + v (x) n] as nodal vectors: -2 sum_j k w (n_i - (n_i . n_j) n_j)."""
    graph = model.graph
    kw = graph.weights * edge_weights(graph, s)
    i, j = graph.edges[:, 0], graph.edges[:, 1]
    dot = np.einsum("ea,ea->e", n[i], n[j])
    out = np.zeros_like(n)
    np.add.at(out, i, -2.0 * kw[:, None] * (n[i] - dot[:, None] * n[j]))
    np.add.at(out, j, -2.0 * kw[:, None] * (n[j] - dot[:, None] * n[i]))
    return out


def uni_tangent_step(
    model: EnergyModel,
    s: np.ndarray,
    n: np.ndarray,
    fixed: Sequence[int],
    config: FlowConfig,
    enforce_cfl: bool = True,
) -> TangentUpdate:
    """Weighted tangent flow step of the line field.

    Solves (1/dt)(t, v)_{H^1_{s^2}} + c(t, v) = -delta_Theta E[s, Theta; V] for
    V = n (x) v + v (x) n, where c is the ring variation evaluated at the
    linearized Theta + n (x) t + t (x) n. ``run_flow`` checks the CFL rule
    once and passes ``enforce_cfl=False``.
    """
    if enforce_cfl:
        check_cfl(model, config)
    n = np.asarray(n, dtype=float)
    s = np.asarray(s, dtype=float)
    N, d = n.shape
    fixed = np.asarray(fixed, dtype=np.int64)
    eye = sp.identity(d, format="csr")
    weights = model.mass.weights

    inner = sp.kron(weighted_h1(model, s), eye, format="csr")
    lhs = inner / config.dt + _line_ring_hessian(model, s, n)
    rhs = _line_ring_rhs(model, s, n).reshape(-1)
    G = model.coupling_director_matrices(s)
    if G is not None:
        lhs = lhs + _node_blocks(_psd_part(G), weights)
        rhs = rhs - (weights[:, None] * np.einsum("nij,nj->ni", G, n)).reshape(-1)
    t, iterations = _solve_tangent(lhs.tocsr(), rhs, n, fixed, config)
    flat = t.reshape(-1)
    norm = float(np.sqrt(max(float(flat @ (inner @ flat)), 0.0)))
    return TangentUpdate(t=t, norm=norm, iterations=iterations)


def project_director(
    n: np.ndarray, t: Optional[np.ndarray] = None, fixed: Optional[np.ndarray] = None
) -> np.ndarray:
    """n_i <- (n_i + t_i) / |n_i + t_i|; rows in ``fixed`` are copied bit for bit."""
    n = np.asarray(n, dtype=float)
    m = n if t is None else n + np.asarray(t, dtype=float)
    norms = np.linalg.norm(m, axis=1)
    bad = np.flatnonzero(norms <= 0.0)
    if bad.size:
        raise FieldError(f"Cannot normalize a zero vector at node {int(bad[0])}.")
    out = m / norms[:, None]
    if fixed is not None:
        # Renormalizing a unit vector can move its last bit.
        out[fixed] = n[fixed]
    return out


def project_line(
    n: np.ndarray, t: Optional[np.ndarray] = None, fixed: Optional[np.ndarray] = None
) -> np.ndarray:
    """Generators of the projected line field; Theta_i = m_i (x) m_i with m_i = (n_i + t_i)/|n_i + t_i|."""
    return project_director(n, t, fixed)
