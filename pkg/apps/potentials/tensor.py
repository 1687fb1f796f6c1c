"""Landau-deGennes bulk potential on Q-tensors and its convex splitting.

psi(Q) = K + (A/2) tr Q^2 - (B/3) tr Q^3 + (C/4) (tr Q^2)^2
       = psi_c(Q) - psi_e(Q) with
psi_c(Q) = K + ((A + D)/2) tr Q^2,
psi_e(Q) = (D/2) tr Q^2 + (B/3) tr Q^3 - (C/4) (tr Q^2)^2.

All functions act nodewise on stacks of matrices of shape (N, d, d).
Variations are returned as traceless matrices; they are the Riesz
representatives of the derivative against traceless test tensors.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from apps.fields.decompose import deviatoric


def _tr2(Q: np.ndarray) -> np.ndarray:
    return np.einsum("nij,nij->n", Q, Q)


def _tr3(Q: np.ndarray) -> np.ndarray:
    return np.einsum("nij,njk,nki->n", Q, Q, Q)


def _square(Q: np.ndarray) -> np.ndarray:
    return np.einsum("nij,njk->nik", Q, Q)


@dataclass(frozen=True)
class LdgBulkPotential:
    K: float = 1.0
    A: float = -7.502104
    B: float = 60.975813
    C: float = 66.519069
    D: float = 552.230967

    def psi(self, Q: np.ndarray) -> np.ndarray:
        tr2 = _tr2(Q)
        return self.K + 0.5 * self.A * tr2 - self.B / 3.0 * _tr3(Q) + 0.25 * self.C * tr2 ** 2

    def psi_c(self, Q: np.ndarray) -> np.ndarray:
        return self.K + 0.5 * (self.A + self.D) * _tr2(Q)

    def psi_e(self, Q: np.ndarray) -> np.ndarray:
        tr2 = _tr2(Q)
        return 0.5 * self.D * tr2 + self.B / 3.0 * _tr3(Q) - 0.25 * self.C * tr2 ** 2

    def variation(self, Q: np.ndarray) -> np.ndarray:
        """A Q - B dev(Q^2) + C tr(Q^2) Q."""
        Q = np.asarray(Q, dtype=float)
        return self.A * Q - self.B * deviatoric(_square(Q)) + self.C * _tr2(Q)[:, None, None] * Q

    def convex_part_variation(self, Q: np.ndarray) -> np.ndarray:
        return (self.A + self.D) * np.asarray(Q, dtype=float)

    def expansive_part_variation(self, Q: np.ndarray) -> np.ndarray:
        """D Q + B dev(Q^2) - C tr(Q^2) Q."""
        Q = np.asarray(Q, dtype=float)
        return self.D * Q + self.B * deviatoric(_square(Q)) - self.C * _tr2(Q)[:, None, None] * Q

    def convex_hessian(self, Q: np.ndarray, P1: np.ndarray, P2: np.ndarray) -> np.ndarray:
        return (self.A + self.D) * np.einsum("nij,nij->n", P1, P2)

    def expansive_hessian(self, Q: np.ndarray, P1: np.ndarray, P2: np.ndarray) -> np.ndarray:
        """Second derivative of psi_e at Q in the directions P1, P2."""
        pp = np.einsum("nij,nij->n", P1, P2)
        qpp = 0.5 * (np.einsum("nij,njk,nki->n", Q, P1, P2) + np.einsum("nij,njk,nki->n", Q, P2, P1))
        q1 = np.einsum("nij,nij->n", Q, P1)
        q2 = np.einsum("nij,nij->n", Q, P2)
        return self.D * pp + 2.0 * self.B * qpp - self.C * (_tr2(Q) * pp + 2.0 * q1 * q2)

    def on_uniaxial(self, s, dim: int = 3):
        """psi(s (n (x) n - I/d)); for d = 3 this is K + (A/3)s^2 - (2B/27)s^3 + (C/9)s^4."""
        s = np.asarray(s, dtype=float)
        a = 1.0 - 1.0 / dim
        b = -1.0 / dim
        tr2 = s ** 2 * (a ** 2 + (dim - 1) * b ** 2)
        tr3 = s ** 3 * (a ** 3 + (dim - 1) * b ** 3)
        return self.K + 0.5 * self.A * tr2 - self.B / 3.0 * tr3 + 0.25 * self.C * tr2 ** 2
