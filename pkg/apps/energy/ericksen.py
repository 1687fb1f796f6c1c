"""Edge-sum energies of the one-constant Ericksen model.

Every sum runs over the edges i < j of the StiffnessGraph, so
sum_{i<j} k_ij (z_i - z_j)^2 = int |grad z_h|^2 for P1 fields z_h.
With w_ij = (s_i^2 + s_j^2)/2:

E_main    = (kappa/2) sum k (s_i - s_j)^2 + (1/2) E_ring
E_ring    = sum k w |n_i - n_j|^2
E_aux     = (1/2) [(kappa - 1) int |grad s|^2 + int |grad u|^2],  u = I_h(s n)
R         = (1/4) sum k (s_i - s_j)^2 |n_i - n_j|^2

E_main - E_aux = R exactly; with |s| in place of s in E_aux and R the
difference is bounded below by R(|s|).
"""
from __future__ import annotations

import numpy as np

from apps.meshes.stiffness import StiffnessGraph, dirichlet_integral


def edge_differences(graph: StiffnessGraph, values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    return values[graph.edges[:, 0]] - values[graph.edges[:, 1]]


def edge_square_norms(graph: StiffnessGraph, values: np.ndarray) -> np.ndarray:
    diff = edge_differences(graph, values)
    flat = diff.reshape(diff.shape[0], -1)
    return np.einsum("ek,ek->e", flat, flat)


def edge_weights(graph: StiffnessGraph, s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    return 0.5 * (s[graph.edges[:, 0]] ** 2 + s[graph.edges[:, 1]] ** 2)


def ring_energy(graph: StiffnessGraph, s: np.ndarray, orientation: np.ndarray) -> float:
    """sum_{i<j} k_ij w_ij |delta_ij orientation|^2 for vectors or matrices."""
    return graph.edge_sum(edge_weights(graph, s) * edge_square_norms(graph, orientation))


def erk_main_energy(graph: StiffnessGraph, s: np.ndarray, n: np.ndarray, kappa: float) -> float:
    return 0.5 * kappa * dirichlet_integral(graph, s) + 0.5 * ring_energy(graph, s, n)


def erk_aux_energy(graph: StiffnessGraph, s: np.ndarray, n: np.ndarray, kappa: float, tilde: bool = False) -> float:
    s = np.asarray(s, dtype=float)
    if tilde:
        s = np.abs(s)
    u = s[:, None] * np.asarray(n, dtype=float)
    return 0.5 * ((kappa - 1.0) * dirichlet_integral(graph, s) + dirichlet_integral(graph, u))


def erk_residual(graph: StiffnessGraph, s: np.ndarray, n: np.ndarray, tilde: bool = False) -> float:
    s = np.asarray(s, dtype=float)
    if tilde:
        s = np.abs(s)
    return 0.25 * graph.edge_sum(edge_differences(graph, s) ** 2 * edge_square_norms(graph, n))


def ring_node_sums(graph: StiffnessGraph, orientation: np.ndarray) -> np.ndarray:
    """d_i = sum_j k_ij |delta_ij orientation|^2, so that d/ds_i E_ring = s_i d_i."""
    return graph.node_sums(edge_square_norms(graph, orientation))


def erk_delta_s(graph: StiffnessGraph, s: np.ndarray, n: np.ndarray, kappa: float, z: np.ndarray) -> float:
    """First variation of E_main in s along z."""
    s = np.asarray(s, dtype=float)
    z = np.asarray(z, dtype=float)
    stiff = graph.edge_sum(edge_differences(graph, s) * edge_differences(graph, z))
    return kappa * stiff + 0.5 * float(np.sum(s * z * ring_node_sums(graph, n)))


def erk_delta_n(graph: StiffnessGraph, s: np.ndarray, n: np.ndarray, v: np.ndarray) -> float:
    """First variation of E_main in n along v: sum_{i<j} k w (delta n) . (delta v)."""
    dn = edge_differences(graph, n)
    dv = edge_differences(graph, v)
    return graph.edge_sum(edge_weights(graph, s) * np.einsum("ek,ek->e", dn, dv))
