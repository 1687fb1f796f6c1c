"""Conforming simplicial meshes in two and three dimensions.

A :class:`SimplicialMesh` is immutable once built. Derived geometry (volumes,
barycentric gradients, diameters, node/cell incidence) is computed lazily and
cached on the instance, so a mesh can be shared freely between fields, energy
models and flow drivers.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from apps.core.exceptions import MeshError

logger = logging.getLogger(__name__)

# Cells whose |det J| falls below this fraction of diam^d are rejected.
DEGENERACY_TOL = 1e-13


def encode_faces(faces: np.ndarray, n_nodes: int) -> np.ndarray:
    """Map each row of vertex indices (order-insensitive) to one int64 key."""
    rows = np.sort(np.asarray(faces, dtype=np.int64), axis=1)
    keys = np.zeros(rows.shape[0], dtype=np.int64)
    for col in range(rows.shape[1]):
        keys = keys * np.int64(n_nodes) + rows[:, col]
    return keys


def cell_faces(cells: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """All (d-1)-faces of every cell and the owning cell of each face.

    Face k of a cell omits local vertex k.
    """
    n_local = cells.shape[1]
    faces = []
    owners = []
    for k in range(n_local):
        keep = [a for a in range(n_local) if a != k]
        faces.append(cells[:, keep])
        owners.append(np.arange(cells.shape[0]))
    return np.vstack(faces), np.concatenate(owners)


def boundary_faces(cells: np.ndarray, n_nodes: int) -> np.ndarray:
    """Faces that belong to exactly one cell."""
    faces, _ = cell_faces(cells)
    keys = encode_faces(faces, n_nodes)
    _, first, counts = np.unique(keys, return_index=True, return_counts=True)
    return faces[np.sort(first[counts == 1])]


@dataclass(frozen=True, eq=False)
class SimplicialMesh:
    """Vertices, positively oriented cells and labelled boundary facets.

    Args:
        vertices: (N, d) coordinates, d in {2, 3}.
        cells: (M, d+1) vertex indices. Negatively oriented cells are
            reordered on construction.
        facets: (F, d) vertex indices of labelled boundary facets.
        facet_labels: one label per facet.
        signed_distance: optional per-vertex signed distance column carried
            over from the mesh file.

    Raises:
        MeshError: on a degenerate cell, an out-of-range index, or a facet
            that is not a face of exactly one cell.
    """

    vertices: np.ndarray
    cells: np.ndarray
    facets: np.ndarray
    facet_labels: Tuple[str, ...]
    signed_distance: Optional[np.ndarray] = field(default=None)

    def __post_init__(self) -> None:
        vertices = np.ascontiguousarray(self.vertices, dtype=float)
        cells = np.array(self.cells, dtype=np.int64, copy=True)
        if vertices.ndim != 2 or vertices.shape[1] not in (2, 3):
            raise MeshError(f"Vertices must be an (N, 2) or (N, 3) array, got shape {vertices.shape}.")
        dim = vertices.shape[1]
        if cells.ndim != 2 or cells.shape[1] != dim + 1:
            raise MeshError(f"Cells must have {dim + 1} vertices each in {dim}D, got shape {cells.shape}.")
        facets = np.asarray(self.facets, dtype=np.int64).reshape(-1, dim)
        labels = tuple(str(x) for x in self.facet_labels)
        if len(labels) != facets.shape[0]:
            raise MeshError(f"{facets.shape[0]} facets but {len(labels)} facet labels.")

        n_nodes = vertices.shape[0]
        for name, arr in (("cell", cells), ("facet", facets)):
            if arr.size and (arr.min() < 0 or arr.max() >= n_nodes):
                bad = int(np.flatnonzero((arr < 0).any(axis=1) | (arr >= n_nodes).any(axis=1))[0])
                raise MeshError(f"{name.capitalize()} {bad} references a vertex outside 0..{n_nodes - 1}.")

        jac = _jacobians(vertices, cells)
        det = np.linalg.det(jac)
        diam = _diameters(vertices, cells)
        degenerate = np.abs(det) <= DEGENERACY_TOL * diam ** dim
        if degenerate.any():
            c = int(np.flatnonzero(degenerate)[0])
            raise MeshError(
                f"Cell {c} is degenerate (signed volume {det[c] / math.factorial(dim):.3e}).",
                cell=c,
            )
        flipped = det < 0
        if flipped.any():
            cells[flipped, 0], cells[flipped, 1] = cells[flipped, 1].copy(), cells[flipped, 0].copy()
            logger.debug("Reoriented %d negatively oriented cells.", int(flipped.sum()))

        if facets.shape[0]:
            faces, _ = cell_faces(cells)
            keys, counts = np.unique(encode_faces(faces, n_nodes), return_counts=True)
            fkeys = encode_faces(facets, n_nodes)
            pos = np.searchsorted(keys, fkeys)
            pos_c = np.minimum(pos, keys.size - 1)
            found = (pos < keys.size) & (keys[pos_c] == fkeys)
            if not found.all():
                f = int(np.flatnonzero(~found)[0])
                raise MeshError(f"Boundary facet {f} {facets[f].tolist()} is not a face of any cell.", facet=f)
            shared = counts[pos_c] != 1
            if shared.any():
                f = int(np.flatnonzero(shared)[0])
                raise MeshError(
                    f"Boundary facet {f} {facets[f].tolist()} is shared by {int(counts[pos_c][f])} cells.",
                    facet=f,
                )

        sd = None
        if self.signed_distance is not None:
            sd = np.asarray(self.signed_distance, dtype=float).reshape(-1)
            if sd.shape[0] != n_nodes:
                raise MeshError(f"Signed distance column has {sd.shape[0]} values for {n_nodes} vertices.")

        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "facets", facets)
        object.__setattr__(self, "facet_labels", labels)
        object.__setattr__(self, "signed_distance", sd)
        vertices.setflags(write=False)
        cells.setflags(write=False)
        facets.setflags(write=False)

    def __str__(self) -> str:
        return f"{self.dim}D mesh ({self.n_nodes} vertices, {self.n_cells} cells, {self.facets.shape[0]} facets)"

    @property
    def dim(self) -> int:
        return int(self.vertices.shape[1])

    @property
    def n_nodes(self) -> int:
        return int(self.vertices.shape[0])

    @property
    def n_cells(self) -> int:
        return int(self.cells.shape[0])

    @cached_property
    def cell_volumes(self) -> np.ndarray:
        det = np.linalg.det(_jacobians(self.vertices, self.cells))
        return det / math.factorial(self.dim)

    @cached_property
    def cell_gradients(self) -> np.ndarray:
        """Barycentric gradients, shape (M, d+1, d); row a is grad(lambda_a)."""
        inv = np.linalg.inv(_jacobians(self.vertices, self.cells))
        # Rows of J^{-1} are the gradients of lambda_1..lambda_d.
        grads = np.empty((self.n_cells, self.dim + 1, self.dim))
        grads[:, 1:, :] = inv
        grads[:, 0, :] = -inv.sum(axis=1)
        return grads

    @cached_property
    def cell_diameters(self) -> np.ndarray:
        return _diameters(self.vertices, self.cells)

    @property
    def max_diameter(self) -> float:
        return float(self.cell_diameters.max())

    @property
    def domain_volume(self) -> float:
        return float(self.cell_volumes.sum())

    @cached_property
    def incidence(self) -> sp.csr_matrix:
        """Node-by-cell incidence matrix (N x M) with unit entries."""
        n_local = self.dim + 1
        rows = self.cells.reshape(-1)
        cols = np.repeat(np.arange(self.n_cells), n_local)
        data = np.ones(rows.size)
        return sp.csr_matrix((data, (rows, cols)), shape=(self.n_nodes, self.n_cells))

    def node_patch(self, node: int) -> np.ndarray:
        """Indices of the cells containing ``node``."""
        inc = self.incidence
        return inc.indices[inc.indptr[node]:inc.indptr[node + 1]]

    @cached_property
    def edges(self) -> np.ndarray:
        """Unique mesh edges as (E, 2) with i < j, sorted lexicographically."""
        n_local = self.dim + 1
        pairs = [self.cells[:, [a, b]] for a in range(n_local) for b in range(a + 1, n_local)]
        pairs = np.sort(np.vstack(pairs), axis=1)
        keys = pairs[:, 0] * np.int64(self.n_nodes) + pairs[:, 1]
        _, first = np.unique(keys, return_index=True)
        return pairs[first]

    @cached_property
    def node_labels(self) -> Tuple[FrozenSet[str], ...]:
        per_node: List[set] = [set() for _ in range(self.n_nodes)]
        for facet, label in zip(self.facets, self.facet_labels):
            for v in facet:
                per_node[int(v)].add(label)
        return tuple(frozenset(s) for s in per_node)

    @cached_property
    def labels(self) -> Tuple[str, ...]:
        return tuple(sorted(set(self.facet_labels)))

    def boundary_nodes(self, labels: Iterable[str]) -> np.ndarray:
        """Sorted unique vertices on facets carrying any of ``labels``.

        Raises:
            MeshError: if a label does not occur on the mesh.
        """
        wanted = list(labels)
        missing = [lab for lab in wanted if lab not in self.labels]
        if missing:
            raise MeshError(f"Unknown boundary label(s) {missing}; mesh has {list(self.labels)}.")
        mask = np.isin(np.asarray(self.facet_labels, dtype=object), wanted)
        if not mask.any():
            return np.zeros(0, dtype=np.int64)
        return np.unique(self.facets[mask])

    @cached_property
    def facet_measures(self) -> np.ndarray:
        """Length (2D) or area (3D) of each labelled boundary facet."""
        if self.facets.shape[0] == 0:
            return np.zeros(0)
        x = self.vertices[self.facets]
        if self.dim == 2:
            return np.linalg.norm(x[:, 1] - x[:, 0], axis=1)
        return 0.5 * np.linalg.norm(np.cross(x[:, 1] - x[:, 0], x[:, 2] - x[:, 0]), axis=1)

    def relabel(self, facet_labels: Sequence[str]) -> "SimplicialMesh":
        return SimplicialMesh(
            vertices=self.vertices,
            cells=self.cells,
            facets=self.facets,
            facet_labels=tuple(facet_labels),
            signed_distance=self.signed_distance,
        )

    def same_as(self, other: "SimplicialMesh") -> bool:
        """True when both meshes have identical vertices and cells."""
        return (
            self.vertices.shape == other.vertices.shape
            and self.cells.shape == other.cells.shape
            and np.array_equal(self.vertices, other.vertices)
            and np.array_equal(self.cells, other.cells)
        )


def _jacobians(vertices: np.ndarray, cells: np.ndarray) -> np.ndarray:
    x = vertices[cells]
    # Column a-1 is x_a - x_0, so rows of J^{-1} are barycentric gradients.
    return np.transpose(x[:, 1:, :] - x[:, :1, :], (0, 2, 1))


def _diameters(vertices: np.ndarray, cells: np.ndarray) -> np.ndarray:
    x = vertices[cells]
    n_local = cells.shape[1]
    best = np.zeros(cells.shape[0])
    for a in range(n_local):
        for b in range(a + 1, n_local):
            best = np.maximum(best, np.linalg.norm(x[:, a] - x[:, b], axis=1))
    return best
