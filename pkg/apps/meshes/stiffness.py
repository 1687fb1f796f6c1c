from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .mesh import SimplicialMesh

logger = logging.getLogger(__name__)

ROW_SUM_TOL = 1e-12
ACUTE_TOL = 1e-14


@dataclass(frozen=True, eq=False)
class StiffnessGraph:
    """Edge weights k_ij = -int grad(phi_i) . grad(phi_j) of a P1 mesh.

    ``matrix`` holds every k_ij including the (negative) diagonal, so each row
    sums to zero. ``edges``/``weights`` list the off-diagonal pairs once with
    i < j; every symmetric double sum over i, j is twice the sum over them.
    """

    n_nodes: int
    matrix: sp.csr_matrix
    edges: np.ndarray
    weights: np.ndarray
    max_abs: float
    row_sums_zero: bool
    weakly_acute: bool

    @cached_property
    def laplacian(self) -> sp.csr_matrix:
        """The usual P1 stiffness matrix, A = -K."""
        return (-self.matrix).tocsr()

    @property
    def min_offdiagonal(self) -> float:
        return float(self.weights.min()) if self.weights.size else 0.0

    def negative_edges(self, tol: float = ACUTE_TOL) -> np.ndarray:
        """Indices into ``edges`` whose weight is below -tol * max|k|."""
        return np.flatnonzero(self.weights < -tol * self.max_abs)

    def edge_sum(self, values: np.ndarray) -> float:
        """sum_{i<j} k_ij * values_e for one value per edge."""
        return float(np.dot(self.weights, values))

    def weighted_laplacian(self, edge_values: np.ndarray) -> sp.csr_matrix:
        """Graph Laplacian with edge weights k_ij * edge_values_e.

        x^T L x = sum_{i<j} k_ij w_ij (x_i - x_j)^2.
        """
        w = self.weights * edge_values
        i, j = self.edges[:, 0], self.edges[:, 1]
        rows = np.concatenate([i, j, i, j])
        cols = np.concatenate([j, i, i, j])
        data = np.concatenate([-w, -w, w, w])
        return sp.csr_matrix((data, (rows, cols)), shape=(self.n_nodes, self.n_nodes))

    def node_sums(self, edge_values: np.ndarray) -> np.ndarray:
        """d_i = sum_j k_ij v_ij for a symmetric per-edge quantity v."""
        w = self.weights * edge_values
        out = np.zeros(self.n_nodes)
        np.add.at(out, self.edges[:, 0], w)
        np.add.at(out, self.edges[:, 1], w)
        return out


def local_stiffness(mesh: SimplicialMesh) -> np.ndarray:
    """Per-cell matrices |T| grad(lambda_a) . grad(lambda_b), shape (M, d+1, d+1)."""
    g = mesh.cell_gradients
    return mesh.cell_volumes[:, None, None] * np.einsum("tak,tbk->tab", g, g)


def assemble_cell_matrices(mesh: SimplicialMesh, local: np.ndarray) -> sp.csr_matrix:
    """Sum per-cell (d+1)x(d+1) blocks into a global N x N matrix."""
    n_local = mesh.dim + 1
    rows = np.repeat(mesh.cells, n_local, axis=1).reshape(-1)
    cols = np.tile(mesh.cells, (1, n_local)).reshape(-1)
    # Duplicates are summed by the COO -> CSR conversion.
    mat = sp.coo_matrix((local.reshape(-1), (rows, cols)), shape=(mesh.n_nodes, mesh.n_nodes))
    return mat.tocsr()


def build_stiffness(mesh: SimplicialMesh) -> StiffnessGraph:
    """Assemble k_ij exactly and certify row sums and weak acuteness."""
    kmat = -assemble_cell_matrices(mesh, local_stiffness(mesh))
    kmat.sum_duplicates()
    kmat.sort_indices()

    edges = mesh.edges
    weights = np.asarray(kmat[edges[:, 0], edges[:, 1]]).reshape(-1)
    max_abs = float(np.abs(kmat.data).max()) if kmat.nnz else 0.0

    row_sums = np.asarray(kmat.sum(axis=1)).reshape(-1)
    row_ok = bool(np.all(np.abs(row_sums) <= ROW_SUM_TOL * max_abs))
    acute = bool(np.all(weights >= -ACUTE_TOL * max_abs)) if weights.size else True

    if not row_ok:
        logger.warning("Stiffness row sums deviate from zero by up to %.3e.", float(np.abs(row_sums).max()))
    if not acute:
        logger.warning(
            "Mesh is not weakly acute: %d negative off-diagonal weights (min %.3e).",
            int(np.count_nonzero(weights < -ACUTE_TOL * max_abs)),
            float(weights.min()),
        )

    return StiffnessGraph(
        n_nodes=mesh.n_nodes,
        matrix=kmat,
        edges=edges,
        weights=weights,
        max_abs=max_abs,
        row_sums_zero=row_ok,
        weakly_acute=acute,
    )


def dirichlet_integral(graph: StiffnessGraph, z: np.ndarray) -> float:
    """int |grad z_h|^2 evaluated as sum_{i<j} k_ij (z_i - z_j)^2.

    For vector or tensor valued nodal data the squared differences are summed
    over the trailing components.
    """
    z = np.asarray(z, dtype=float)
    diff = z[graph.edges[:, 0]] - z[graph.edges[:, 1]]
    sq = diff.reshape(diff.shape[0], -1)
    return graph.edge_sum(np.einsum("ek,ek->e", sq, sq))


def element_dirichlet_integral(mesh: SimplicialMesh, z: np.ndarray) -> float:
    """int |grad z_h|^2 by direct per-cell quadrature of the P1 gradient."""
    z = np.asarray(z, dtype=float)
    zc = z[mesh.cells].reshape(mesh.n_cells, mesh.dim + 1, -1)
    grad = np.einsum("tak,tac->tkc", mesh.cell_gradients, zc)
    return float(np.sum(mesh.cell_volumes * np.einsum("tkc,tkc->t", grad, grad)))
