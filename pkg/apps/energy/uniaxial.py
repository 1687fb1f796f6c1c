"""Edge-sum energies of the uniaxially constrained Landau-deGennes model.

E_main = ((d-1)/(2d)) sum k (s_i - s_j)^2 + (1/2) sum k w |Theta_i - Theta_j|^2
E_aux  = (1/2) (-(1/d) int |grad s|^2 + int |grad U|^2),  U = I_h(s Theta)
R      = (1/4) sum k (s_i - s_j)^2 |Theta_i - Theta_j|^2

Sums run over edges i < j; Theta_i = n_i (x) n_i.
"""
from __future__ import annotations

import numpy as np

from apps.meshes.stiffness import StiffnessGraph, dirichlet_integral

from .ericksen import edge_differences, edge_square_norms, edge_weights, ring_energy, ring_node_sums


def projectors(n: np.ndarray) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    return np.einsum("ni,nj->nij", n, n)


def uniaxial_kappa(dim: int) -> float:
    return (dim - 1.0) / dim


def uni_main_energy(graph: StiffnessGraph, s: np.ndarray, n: np.ndarray) -> float:
    dim = np.asarray(n).shape[1]
    theta = projectors(n)
    return 0.5 * uniaxial_kappa(dim) * dirichlet_integral(graph, s) + 0.5 * ring_energy(graph, s, theta)


def uni_aux_energy(graph: StiffnessGraph, s: np.ndarray, n: np.ndarray, tilde: bool = False) -> float:
    s = np.asarray(s, dtype=float)
    if tilde:
        s = np.abs(s)
    dim = np.asarray(n).shape[1]
    U = s[:, None, None] * projectors(n)
    return 0.5 * (-dirichlet_integral(graph, s) / dim + dirichlet_integral(graph, U))


def uni_residual(graph: StiffnessGraph, s: np.ndarray, n: np.ndarray, tilde: bool = False) -> float:
    s = np.asarray(s, dtype=float)
    if tilde:
        s = np.abs(s)
    return 0.25 * graph.edge_sum(edge_differences(graph, s) ** 2 * edge_square_norms(graph, projectors(n)))


def uni_delta_s(graph: StiffnessGraph, s: np.ndarray, n: np.ndarray, z: np.ndarray) -> float:
    s = np.asarray(s, dtype=float)
    z = np.asarray(z, dtype=float)
    dim = np.asarray(n).shape[1]
    stiff = graph.edge_sum(edge_differences(graph, s) * edge_differences(graph, z))
    return uniaxial_kappa(dim) * stiff + 0.5 * float(np.sum(s * z * ring_node_sums(graph, projectors(n))))


def uni_delta_theta(graph: StiffnessGraph, s: np.ndarray, n: np.ndarray, V: np.ndarray) -> float:
    """First variation in Theta along a symmetric nodal field V.

    Tangent variations of a line field are V_i = n_i (x) v_i + v_i (x) n_i.
    """
    dT = edge_differences(graph, projectors(n))
    dV = edge_differences(graph, V)
    return graph.edge_sum(edge_weights(graph, s) * np.einsum("eij,eij->e", dT, dV))


def tangent_variation(n: np.ndarray, v: np.ndarray) -> np.ndarray:
    """V_i = n_i (x) v_i + v_i (x) n_i."""
    outer = np.einsum("ni,nj->nij", n, v)
    return outer + np.swapaxes(outer, 1, 2)
