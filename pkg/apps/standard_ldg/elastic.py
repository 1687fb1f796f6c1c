"""Elastic bilinear form of the Landau-deGennes energy on P1 Q-tensor fields.

a(Q, P) = int L1 dQ_ij/dx_k dP_ij/dx_k + L2 (dQ_ij/dx_j)(dP_ik/dx_k)
        + L3 (dQ_ik/dx_j)(dP_ij/dx_k)

All integrands are cellwise constant for P1 fields, so the element
contributions are exact. Degrees of freedom are laid out node-major:
dof = node * n_components + component.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from apps.fem.operators import SparseSymOperator
from apps.fields.decompose import basis_tensors, component_metric
from apps.fields.fields import n_components
from apps.meshes.mesh import SimplicialMesh

from .params import LdgElasticParams


def component_dofs(nodes: np.ndarray, dim: int) -> np.ndarray:
    """All component dofs of the given nodes, node-major."""
    nc = n_components(dim)
    nodes = np.asarray(nodes, dtype=np.int64).reshape(-1)
    return (nodes[:, None] * nc + np.arange(nc)[None]).reshape(-1)


def component_mass(weights: np.ndarray, dim: int) -> sp.csr_matrix:
    """Lumped (Q, P) with nodal weights: blocks m_i G with G_ab = E_a : E_b."""
    return sp.kron(sp.diags(np.asarray(weights, dtype=float)), component_metric(dim), format="csr")


def local_elastic_matrices(mesh: SimplicialMesh, params: LdgElasticParams) -> np.ndarray:
    """Per-cell matrices indexed by (vertex, component) pairs."""
    d = mesh.dim
    nc = n_components(d)
    g = mesh.cell_gradients
    vol = mesh.cell_volumes
    E = basis_tensors(d)
    metric = component_metric(d)

    local = params.L1 * np.einsum("t,tak,tbk,ce->tacbe", vol, g, g, metric)
    if params.L2 or params.L3:
        # U[t, a, c] = E_c grad(lambda_a)
        U = np.einsum("cij,taj->taci", E, g)
        if params.L2:
            local = local + params.L2 * np.einsum("t,taci,tbei->tacbe", vol, U, U)
        if params.L3:
            local = local + params.L3 * np.einsum("t,tbci,taei->tacbe", vol, U, U)
    k = (d + 1) * nc
    return local.reshape(mesh.n_cells, k, k)


def assemble_elastic_form(params: LdgElasticParams, mesh: SimplicialMesh) -> SparseSymOperator:
    d = mesh.dim
    nc = n_components(d)
    local = local_elastic_matrices(mesh, params)
    dofs = (mesh.cells[:, :, None] * nc + np.arange(nc)[None, None]).reshape(mesh.n_cells, -1)
    k = dofs.shape[1]
    rows = np.repeat(dofs, k, axis=1).reshape(-1)
    cols = np.tile(dofs, (1, k)).reshape(-1)
    return SparseSymOperator.from_triplets(rows, cols, local.reshape(-1), mesh.n_nodes * nc)
