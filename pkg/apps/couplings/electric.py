"""Dielectric coupling to an applied electric field E.

e_h(s, n, v) = sum_i m_i [|eps_a| |E|^2 (n . v) - eps_a s (E . n)(E . v)]
E_ext = (K/2) (-eps_bar sum m (1 - s gamma_a)|E|^2 + e_h(s, n, n) - |eps_a| sum m |E|^2)

For unit n this is -(K/2) int I_h[eps_bar |E|^2 + eps_a E . Q E] with
Q = s (n (x) n - I/d).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from apps.core.exceptions import CouplingError
from apps.fem.quadrature import LumpedMass

logger = logging.getLogger(__name__)

DEGREE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ElectricParams:
    field: np.ndarray
    k_ext: float
    eps_parallel: float
    eps_perp: float

    def __post_init__(self) -> None:
        E = np.asarray(self.field, dtype=float)
        if E.ndim not in (1, 2) or E.shape[-1] not in (2, 3):
            raise CouplingError(f"Electric field must be a d-vector or (N, d) array, got shape {E.shape}.")
        if self.k_ext < 0.0:
            raise CouplingError(f"K_ext must be nonnegative, got {self.k_ext!r}.")
        if self.eps_bar <= 0.0:
            raise CouplingError("Mean permittivity must be positive.")
        object.__setattr__(self, "field", E)

    @property
    def dim(self) -> int:
        return int(self.field.shape[-1])

    @property
    def eps_bar(self) -> float:
        d = np.asarray(self.field).shape[-1]
        return (self.eps_parallel + (d - 1) * self.eps_perp) / d

    @property
    def eps_a(self) -> float:
        return self.eps_parallel - self.eps_perp

    @property
    def gamma_a(self) -> float:
        return self.eps_a / (self.dim * self.eps_bar)


@dataclass(frozen=True, eq=False)
class ElectricCoupling:
    params: ElectricParams
    mass: LumpedMass

    @property
    def nodal_field(self) -> np.ndarray:
        E = self.params.field
        if E.ndim == 1:
            return np.broadcast_to(E, (len(self.mass), E.size))
        if E.shape[0] != len(self.mass):
            raise CouplingError(f"Nodal electric field has {E.shape[0]} rows, mesh has {len(self.mass)} nodes.")
        return E

    def _check_degree(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        bad = np.flatnonzero(np.abs(s) > 1.0 + DEGREE_TOL)
        if bad.size:
            raise CouplingError(f"|s| = {abs(s[bad[0]]):.6g} > 1 at node {int(bad[0])}; the electric form is not PSD.")
        return s

    def node_matrices(self, s: np.ndarray) -> np.ndarray:
        """|eps_a| |E|^2 I - eps_a s E E^T per node."""
        s = self._check_degree(s)
        E = self.nodal_field
        p = self.params
        E2 = np.einsum("ni,ni->n", E, E)
        eye = np.eye(E.shape[1])[None]
        return abs(p.eps_a) * E2[:, None, None] * eye - p.eps_a * s[:, None, None] * np.einsum("ni,nj->nij", E, E)

    def e_h(self, s: np.ndarray, n: np.ndarray, v: np.ndarray) -> float:
        H = self.node_matrices(s)
        return float(np.dot(self.mass.weights, np.einsum("ni,nij,nj->n", v, H, n)))

    def energy(self, s: np.ndarray, n: np.ndarray) -> float:
        s = self._check_degree(s)
        p = self.params
        E2 = np.einsum("ni,ni->n", self.nodal_field, self.nodal_field)
        w = self.mass.weights
        bulk = -p.eps_bar * float(np.dot(w, (1.0 - s * p.gamma_a) * E2))
        return 0.5 * p.k_ext * (bulk + self.e_h(s, n, n) - abs(p.eps_a) * float(np.dot(w, E2)))

    def s_coefficients(self, n: np.ndarray) -> np.ndarray:
        """a_i with delta_s E_ext[z] = sum m_i z_i a_i; E_ext is affine in s."""
        p = self.params
        E = self.nodal_field
        E2 = np.einsum("ni,ni->n", E, E)
        En = np.einsum("ni,ni->n", E, np.asarray(n, dtype=float))
        return 0.5 * p.k_ext * (p.eps_bar * p.gamma_a * E2 - p.eps_a * En ** 2)

    def delta_s(self, s: np.ndarray, n: np.ndarray, z: np.ndarray) -> float:
        return float(np.dot(self.mass.weights, np.asarray(z, dtype=float) * self.s_coefficients(n)))

    def delta_n(self, s: np.ndarray, n: np.ndarray, v: np.ndarray) -> float:
        return self.params.k_ext * self.e_h(s, n, v)

    def director_matrices(self, s: np.ndarray) -> np.ndarray:
        """G with the n-dependent part of E_ext = 1/2 sum m n^T G n."""
        return self.params.k_ext * self.node_matrices(s)

    def s_system_terms(self, n: np.ndarray):
        return np.zeros(len(self.mass)), -self.s_coefficients(n)

    def tensor_energy(self, Q: np.ndarray) -> float:
        """-(K/2) int I_h[eps_bar |E|^2 + eps_a E . Q E] for nodal matrices Q."""
        p = self.params
        E = self.nodal_field
        E2 = np.einsum("ni,ni->n", E, E)
        EQE = np.einsum("ni,nij,nj->n", E, np.asarray(Q, dtype=float), E)
        return -0.5 * p.k_ext * float(np.dot(self.mass.weights, p.eps_bar * E2 + p.eps_a * EQE))
