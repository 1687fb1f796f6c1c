from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from apps.core.constants import MODEL_UNIAXIAL

from .fields import DegreeField, LineField, QTensorField, n_components

logger = logging.getLogger(__name__)

DEGENERACY_TOL = 1e-10
ISOTROPIC_TOL = 1e-14

_SQRT2 = np.sqrt(2.0)


def basis_tensors(dim: int) -> np.ndarray:
    """E_a with Q = sum_a q_a E_a for the component layout of QTensorField."""
    n = n_components(dim)
    E = np.zeros((n, dim, dim))
    if dim == 2:
        E[0] = np.diag([1.0, -1.0])
        E[1, 0, 1] = E[1, 1, 0] = 1.0
        return E
    E[0] = np.diag([1.0, 0.0, -1.0])          # q11
    E[1, 0, 1] = E[1, 1, 0] = 1.0             # q12
    E[2, 0, 2] = E[2, 2, 0] = 1.0             # q13
    E[3] = np.diag([0.0, 1.0, -1.0])          # q22
    E[4, 1, 2] = E[4, 2, 1] = 1.0             # q23
    return E


def component_metric(dim: int) -> np.ndarray:
    """G_ab = E_a : E_b, so Q : P = q^T G p."""
    E = basis_tensors(dim)
    return np.einsum("aij,bij->ab", E, E)


def components_to_matrices(components: np.ndarray, dim: int) -> np.ndarray:
    return np.einsum("na,aij->nij", np.asarray(components, dtype=float), basis_tensors(dim))


def matrices_to_components(matrices: np.ndarray, dim: int) -> np.ndarray:
    Q = np.asarray(matrices, dtype=float)
    if dim == 2:
        return np.stack([Q[:, 0, 0], Q[:, 0, 1]], axis=1)
    return np.stack([Q[:, 0, 0], Q[:, 0, 1], Q[:, 0, 2], Q[:, 1, 1], Q[:, 1, 2]], axis=1)


def orthonormal_traceless_basis(dim: int) -> np.ndarray:
    """Frobenius-orthonormal basis of symmetric traceless d x d matrices."""
    if dim == 2:
        B = np.zeros((2, 2, 2))
        B[0] = np.diag([1.0, -1.0]) / _SQRT2
        B[1, 0, 1] = B[1, 1, 0] = 1.0 / _SQRT2
        return B
    B = np.zeros((5, 3, 3))
    B[0] = np.diag([1.0, -1.0, 0.0]) / _SQRT2
    B[1] = np.diag([1.0, 1.0, -2.0]) / np.sqrt(6.0)
    for k, (i, j) in enumerate(((0, 1), (0, 2), (1, 2)), start=2):
        B[k, i, j] = B[k, j, i] = 1.0 / _SQRT2
    return B


def deviatoric(matrices: np.ndarray) -> np.ndarray:
    M = np.asarray(matrices, dtype=float)
    dim = M.shape[-1]
    tr = np.trace(M, axis1=-2, axis2=-1)
    return M - tr[..., None, None] * np.eye(dim) / dim


def uniaxial_compose(s: np.ndarray, vectors: np.ndarray) -> QTensorField:
    """Q_i = s_i (n_i (x) n_i - I/d)."""
    s = np.asarray(getattr(s, "values", s), dtype=float)
    n = np.asarray(getattr(vectors, "vectors", vectors), dtype=float)
    dim = n.shape[1]
    mats = s[:, None, None] * (np.einsum("ni,nj->nij", n, n) - np.eye(dim) / dim)
    return QTensorField(components=matrices_to_components(mats, dim), dim=dim)


def biaxiality(matrices: np.ndarray) -> np.ndarray:
    """beta = 1 - 6 (tr Q^3)^2 / (tr Q^2)^3, clipped to [0, 1].

    beta = 0 where Q vanishes and identically in 2D.
    """
    Q = np.asarray(matrices, dtype=float)
    if Q.shape[-1] == 2:
        return np.zeros(Q.shape[0])
    Q2 = np.einsum("nij,njk->nik", Q, Q)
    tr2 = np.trace(Q2, axis1=1, axis2=2)
    tr3 = np.einsum("nij,nji->n", Q2, Q)
    beta = np.zeros(Q.shape[0])
    live = tr2 > ISOTROPIC_TOL
    beta[live] = 1.0 - 6.0 * tr3[live] ** 2 / tr2[live] ** 3
    return np.clip(beta, 0.0, 1.0)


def _canonical_sign(v: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(v), axis=-1)
    sign = np.sign(np.take_along_axis(v, idx[..., None], axis=-1))
    sign[sign == 0] = 1.0
    return v * sign


@dataclass(frozen=True, eq=False)
class UniaxialDecomposition:
    degree: np.ndarray
    line: LineField
    biaxiality: np.ndarray
    degenerate_nodes: np.ndarray

    def degree_field(self, model: str = MODEL_UNIAXIAL) -> DegreeField:
        return DegreeField(values=self.degree, model=model, dim=self.line.dim)


def uniaxial_decompose(Q: QTensorField, previous: Optional[LineField] = None) -> UniaxialDecomposition:
    """Dominant eigenpair per node: s_eff = d/(d-1) * lambda and Theta = v (x) v.

    In 3D the dominant eigenvalue is the one of largest magnitude; in 2D, where
    the two eigenvalues always have equal magnitude, it is the larger one.
    Eigenvectors are signed so that their largest-magnitude component is
    positive. Where the dominant eigenvalue is degenerate the previous
    line field's direction is kept (projected onto the eigenspace) and
    otherwise the lexicographically smallest candidate is used.
    """
    mats = Q.matrices
    dim = Q.dim
    w, V = np.linalg.eigh(mats)
    if dim == 2:
        dom = np.full(w.shape[0], dim - 1)
    else:
        dom = np.argmax(np.abs(w), axis=1)
    lam = np.take_along_axis(w, dom[:, None], axis=1)[:, 0]
    vec = np.take_along_axis(V, dom[:, None, None], axis=2)[:, :, 0]
    vec = _canonical_sign(vec)

    scale = np.maximum(np.abs(w).max(axis=1), 1.0)
    dominant_abs = np.abs(w) if dim == 3 else w
    gaps = np.abs(dominant_abs - np.take_along_axis(dominant_abs, dom[:, None], axis=1))
    gaps[np.arange(w.shape[0]), dom] = np.inf
    degenerate = np.flatnonzero(gaps.min(axis=1) <= DEGENERACY_TOL * scale)

    for node in degenerate:
        target = dominant_abs[node, dom[node]]
        space = V[node][:, np.abs(dominant_abs[node] - target) <= DEGENERACY_TOL * scale[node]]
        chosen = None
        if previous is not None:
            prev = previous.vectors[node]
            proj = space @ (space.T @ prev)
            if np.linalg.norm(proj) > 1e-8:
                chosen = proj / np.linalg.norm(proj)
        if chosen is None:
            chosen = np.asarray(min(tuple(c) for c in _canonical_sign(space.T)))
        vec[node] = _canonical_sign(chosen)
        lam[node] = vec[node] @ mats[node] @ vec[node]
    if degenerate.size:
        logger.debug("%d nodes have a degenerate dominant eigenvalue.", degenerate.size)

    s_eff = dim / (dim - 1) * lam
    return UniaxialDecomposition(
        degree=s_eff,
        line=LineField.normalized(vec),
        biaxiality=biaxiality(mats),
        degenerate_nodes=degenerate,
    )
