from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Union

import numpy as np

from apps.core.exceptions import FieldError, MeshError
from apps.meshes.mesh import SimplicialMesh


@dataclass(frozen=True, eq=False)
class LumpedMass:
    """Nodal weights m_i = sum_{T containing x_i} |T| / (d+1)."""

    weights: np.ndarray

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    def __len__(self) -> int:
        return int(self.weights.shape[0])

    def integrate(self, values: np.ndarray) -> Union[float, np.ndarray]:
        return lumped_integral(self, values)

    def inner(self, f: np.ndarray, g: np.ndarray) -> float:
        """Lumped L2 product; trailing components are contracted."""
        f = np.asarray(f, dtype=float)
        g = np.asarray(g, dtype=float)
        prod = (f * g).reshape(f.shape[0], -1).sum(axis=1)
        return float(np.dot(self.weights, prod))

    def norm(self, f: np.ndarray) -> float:
        return float(np.sqrt(max(self.inner(f, f), 0.0)))


def lumped_mass(mesh: SimplicialMesh) -> LumpedMass:
    share = mesh.cell_volumes / (mesh.dim + 1)
    weights = np.asarray(mesh.incidence @ share).reshape(-1)
    if np.any(weights <= 0.0):
        node = int(np.flatnonzero(weights <= 0.0)[0])
        raise MeshError(f"Vertex {node} belongs to no cell; its lumped mass is zero.")
    weights.setflags(write=False)
    return LumpedMass(weights=weights)


def lumped_integral(mesh_or_mass: Union[SimplicialMesh, LumpedMass], values: np.ndarray) -> Union[float, np.ndarray]:
    """sum_i m_i f_i, the exact integral of the P1 interpolant I_h f.

    Nodal vector or tensor data integrate componentwise.
    """
    mass = mesh_or_mass if isinstance(mesh_or_mass, LumpedMass) else lumped_mass(mesh_or_mass)
    f = np.asarray(values, dtype=float)
    if f.shape[:1] != (len(mass),):
        raise FieldError(f"Expected {len(mass)} nodal values, got array of shape {f.shape}.")
    out = np.tensordot(mass.weights, f, axes=(0, 0))
    return float(out) if np.ndim(out) == 0 else out


def boundary_lumped_mass(mesh: SimplicialMesh, labels: Optional[Iterable[str]] = None) -> np.ndarray:
    """Per-node boundary weights: each facet gives |F|/d to each of its vertices."""
    weights = np.zeros(mesh.n_nodes)
    if mesh.facets.shape[0] == 0:
        return weights
    if labels is None:
        mask = np.ones(mesh.facets.shape[0], dtype=bool)
    else:
        wanted = list(labels)
        missing = [lab for lab in wanted if lab not in mesh.labels]
        if missing:
            raise MeshError(f"Unknown boundary label(s) {missing}; mesh has {list(mesh.labels)}.")
        mask = np.isin(np.asarray(mesh.facet_labels, dtype=object), wanted)
    share = mesh.facet_measures[mask] / mesh.dim
    np.add.at(weights, mesh.facets[mask], share[:, None])
    return weights


def p1_squared_cell_integrals(mesh: SimplicialMesh, values: np.ndarray) -> np.ndarray:
    """Exact int_T s_h^2 per cell for a P1 field s_h."""
    s = np.asarray(values, dtype=float)[mesh.cells]
    d = mesh.dim
    factor = mesh.cell_volumes / ((d + 1) * (d + 2))
    return factor * (s.sum(axis=1) ** 2 + (s ** 2).sum(axis=1))


def patch_average(mesh: SimplicialMesh, cell_values: np.ndarray) -> np.ndarray:
    """Volume-weighted average over each node's patch of per-cell data."""
    cv = np.asarray(cell_values, dtype=float)
    flat = cv.reshape(mesh.n_cells, -1)
    weighted = mesh.incidence @ (mesh.cell_volumes[:, None] * flat)
    total = mesh.incidence @ mesh.cell_volumes
    return (weighted / total[:, None]).reshape((mesh.n_nodes,) + cv.shape[1:])
