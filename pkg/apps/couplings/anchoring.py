"""Weak anchoring on a phase-field colloid, mass lumped with nodal grad(phi).

With g = grad(phi_eps) at a node, g2 = |g|^2 and the node matrix

    H = K_nu [2 s s* (g2 I - g g^T) + g2 (d-1)/d (s - s*)^2 I]
      + K_1 2 s^2 g g^T + K_2 g2 4 s*^2 (s - s*)^2 I,

the forms are a_n(n, v) = sum_i m_i v_i^T H_i n_i and, for fixed n,

    a_s(s, z) = sum m s z c,  omega(z) = sum m z omega_hat,  zeta(z) = sum m z zeta_hat,

with a_n(n, n) = a_s(s, s) + omega(s) + zeta(s* - 2s). The energy is
|S^{d-1}| eps a_n(n, n) / 2.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from apps.core.exceptions import CouplingError
from apps.fem.quadrature import LumpedMass

from .phase_field import PhaseFieldColloid

logger = logging.getLogger(__name__)

MONOTONE_TOL = 1e-12


@dataclass(frozen=True)
class AnchoringParams:
    s_star: float
    k_normal: float = 0.0
    k_planar_1: float = 0.0
    k_planar_2: float = 0.0

    def __post_init__(self) -> None:
        for name in ("k_normal", "k_planar_1", "k_planar_2"):
            value = getattr(self, name)
            if value < 0.0:
                raise CouplingError(f"Anchoring weight {name} must be nonnegative, got {value!r}.")


@dataclass(frozen=True, eq=False)
class Anchoring:
    colloid: PhaseFieldColloid
    params: AnchoringParams
    mass: LumpedMass

    @property
    def weight(self) -> float:
        return self.colloid.interface_weight

    @property
    def dim(self) -> int:
        return self.colloid.mesh.dim

    def node_matrices(self, s: np.ndarray) -> np.ndarray:
        p = self.params
        d = self.dim
        s = np.asarray(s, dtype=float)
        g = self.colloid.nodal_gradients
        g2 = self.colloid.nodal_gradient_sq
        eye = np.eye(d)[None]
        ggT = np.einsum("ni,nj->nij", g, g)
        dev = (s - p.s_star) ** 2
        H = p.k_normal * (
            2.0 * (s * p.s_star)[:, None, None] * (g2[:, None, None] * eye - ggT)
            + (g2 * (d - 1.0) / d * dev)[:, None, None] * eye
        )
        H = H + p.k_planar_1 * 2.0 * (s ** 2)[:, None, None] * ggT
        H = H + p.k_planar_2 * (g2 * 4.0 * p.s_star ** 2 * dev)[:, None, None] * eye
        return H

    def a_n(self, s: np.ndarray, n: np.ndarray, v: np.ndarray) -> float:
        H = self.node_matrices(s)
        return float(np.dot(self.mass.weights, np.einsum("ni,nij,nj->n", v, H, n)))

    def s_coefficients(self, n: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Nodal (c, omega_hat, zeta_hat) of the forms in s for fixed n."""
        p = self.params
        d = self.dim
        n = np.asarray(n, dtype=float)
        g = self.colloid.nodal_gradients
        g2 = self.colloid.nodal_gradient_sq
        nn = np.einsum("ni,ni->n", n, n)
        ng = np.einsum("ni,ni->n", n, g)
        normal = g2 * (d - 1.0) / d * nn
        planar = g2 * 4.0 * p.s_star ** 2 * nn
        c = p.k_normal * normal + p.k_planar_1 * 2.0 * ng ** 2 + p.k_planar_2 * planar
        omega = p.k_normal * 2.0 * p.s_star * (nn * g2 - ng ** 2)
        zeta = p.s_star * (p.k_normal * normal + p.k_planar_2 * planar)
        return c, omega, zeta

    def a_s(self, s: np.ndarray, z: np.ndarray, n: np.ndarray) -> float:
        c, _, _ = self.s_coefficients(n)
        return float(np.dot(self.mass.weights, np.asarray(s) * np.asarray(z) * c))

    def omega(self, z: np.ndarray, n: np.ndarray) -> float:
        _, omega, _ = self.s_coefficients(n)
        return float(np.dot(self.mass.weights, np.asarray(z) * omega))

    def zeta(self, z: np.ndarray, n: np.ndarray) -> float:
        _, _, zeta = self.s_coefficients(n)
        return float(np.dot(self.mass.weights, np.asarray(z) * zeta))

    def energy(self, s: np.ndarray, n: np.ndarray) -> float:
        return 0.5 * self.weight * self.a_n(s, n, n)

    def delta_s(self, s: np.ndarray, n: np.ndarray, z: np.ndarray) -> float:
        return self.weight * (self.a_s(s, z, n) + 0.5 * self.omega(z, n) - self.zeta(z, n))

    def delta_n(self, s: np.ndarray, n: np.ndarray, v: np.ndarray) -> float:
        return self.weight * self.a_n(s, n, v)

    def director_matrices(self, s: np.ndarray) -> np.ndarray:
        """G with anchoring energy = 1/2 sum m n^T G n."""
        return self.weight * self.node_matrices(s)

    def s_system_terms(self, n: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Nodal diagonal and right-hand-side densities of the implicit s-step."""
        c, omega, zeta = self.s_coefficients(n)
        return self.weight * c, -self.weight * (0.5 * omega - zeta)


@dataclass(frozen=True)
class MonotoneReport:
    checked: int
    worst_slack: float
    violations: Tuple[Tuple[int, Tuple[float, ...]], ...]

    @property
    def passed(self) -> bool:
        return not self.violations


def anchoring_projection_monotone(
    node_matrices: np.ndarray,
    n: np.ndarray,
    mass: LumpedMass,
    tol: float = MONOTONE_TOL,
) -> MonotoneReport:
    """Check m_h(n, n) >= m_h(n/|n|, n/|n|) node by node for |n_i| >= 1.

    Violating nodes are reported with the eigenvalues of their matrix.
    """
    n = np.asarray(n, dtype=float)
    H = np.asarray(node_matrices, dtype=float)
    norms = np.linalg.norm(n, axis=1)
    short = np.flatnonzero(norms < 1.0 - 1e-14)
    if short.size:
        raise CouplingError(f"|n| = {norms[short[0]]:.6g} < 1 at node {int(short[0])}.")
    unit = n / norms[:, None]
    before = mass.weights * np.einsum("ni,nij,nj->n", n, H, n)
    after = mass.weights * np.einsum("ni,nij,nj->n", unit, H, unit)
    slack = before - after
    scale = max(float(np.abs(before).max(initial=0.0)), 1.0)
    bad = np.flatnonzero(slack < -tol * scale)
    violations: List[Tuple[int, Tuple[float, ...]]] = []
    for node in bad:
        eig = np.linalg.eigvalsh(0.5 * (H[node] + H[node].T))
        violations.append((int(node), tuple(float(e) for e in eig)))
    if violations:
        logger.warning("Lumped form is not monotone under projection at %d nodes.", len(violations))
    return MonotoneReport(
        checked=int(n.shape[0]),
        worst_slack=float(slack.min(initial=0.0)),
        violations=tuple(violations),
    )


@dataclass(frozen=True, eq=False)
class TensorAnchoring:
    """Weak normal anchoring of a Q-tensor field on a phase-field colloid.

    J(Q) = (K/2) |S^{d-1}| eps sum_i m_i g2_i |Q_i - Q_nu_i|^2 with
    g2 Q_nu = s* (g g^T - g2 I/d). On Q = s (n n^T - I/d) this equals the
    normal part of :class:`Anchoring`.
    """

    colloid: PhaseFieldColloid
    s_star: float
    k_normal: float
    mass: LumpedMass

    def __post_init__(self) -> None:
        if self.k_normal < 0.0:
            raise CouplingError(f"Anchoring weight k_normal must be nonnegative, got {self.k_normal!r}.")

    @property
    def dim(self) -> int:
        return self.colloid.mesh.dim

    def node_weights(self) -> np.ndarray:
        """K |S^{d-1}| eps m_i g2_i, the nodal factor of the implicit mass term."""
        return self.k_normal * self.colloid.interface_weight * self.mass.weights * self.colloid.nodal_gradient_sq

    def weighted_target(self) -> np.ndarray:
        """g2 Q_nu = s* (g g^T - g2 I/d) per node."""
        g = self.colloid.nodal_gradients
        g2 = self.colloid.nodal_gradient_sq
        return self.s_star * (np.einsum("ni,nj->nij", g, g) - g2[:, None, None] * np.eye(self.dim)[None] / self.dim)

    def energy(self, Q: np.ndarray) -> float:
        Q = np.asarray(Q, dtype=float)
        g2 = self.colloid.nodal_gradient_sq
        d = self.dim
        QQ = np.einsum("nij,nij->n", Q, Q)
        cross = np.einsum("nij,nij->n", Q, self.weighted_target())
        # g2 |Q_nu|^2 = s*^2 g2 (d-1)/d stays finite where g vanishes.
        density = g2 * QQ - 2.0 * cross + self.s_star ** 2 * g2 * (d - 1.0) / d
        weight = self.k_normal * self.colloid.interface_weight
        return 0.5 * weight * float(np.dot(self.mass.weights, density))
