"""Structured weakly acute meshes of boxes.

Boundary facets are labelled by the box face they lie on: ``xmin``, ``xmax``,
``ymin``, ``ymax`` and in 3D ``zmin``, ``zmax``.
"""
from __future__ import annotations

import itertools
import logging
from typing import Optional, Sequence, Tuple

import numpy as np

from .mesh import SimplicialMesh, boundary_faces

logger = logging.getLogger(__name__)

Bounds = Sequence[Tuple[float, float]]

FACE_LABELS = ("xmin", "xmax", "ymin", "ymax", "zmin", "zmax")


def label_box_facets(vertices: np.ndarray, facets: np.ndarray, bbox: Bounds) -> Tuple[str, ...]:
    """Name each boundary facet after the first box face containing it."""
    x = vertices[facets]
    labels = []
    for f in range(facets.shape[0]):
        name = None
        for axis, (lo, hi) in enumerate(bbox):
            scale = max(abs(hi - lo), 1.0)
            coords = x[f, :, axis]
            if np.all(np.abs(coords - lo) <= 1e-12 * scale):
                name = FACE_LABELS[2 * axis]
            elif np.all(np.abs(coords - hi) <= 1e-12 * scale):
                name = FACE_LABELS[2 * axis + 1]
            if name is not None:
                break
        labels.append(name or "boundary")
    return tuple(labels)


def generate_crisscross_2d(nx: int, ny: int, bbox: Optional[Bounds] = None) -> SimplicialMesh:
    """Split every grid cell into four triangles about its centroid.

    Square grid cells (equal spacing in x and y) give a weakly acute mesh.
    """
    if nx < 1 or ny < 1:
        raise ValueError("nx and ny must be at least 1.")
    bbox = tuple(bbox or ((0.0, 1.0), (0.0, 1.0)))
    (x0, x1), (y0, y1) = bbox
    hx, hy = (x1 - x0) / nx, (y1 - y0) / ny
    if not np.isclose(hx, hy):
        logger.warning("Crisscross cells are %gx%g; non-square cells are not weakly acute.", hx, hy)

    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    gx, gy = np.meshgrid(xs, ys, indexing="xy")
    grid = np.column_stack([gx.reshape(-1), gy.reshape(-1)])
    cx, cy = np.meshgrid(xs[:-1] + 0.5 * hx, ys[:-1] + 0.5 * hy, indexing="xy")
    centers = np.column_stack([cx.reshape(-1), cy.reshape(-1)])
    vertices = np.vstack([grid, centers])

    i, j = np.meshgrid(np.arange(nx), np.arange(ny), indexing="xy")
    i, j = i.reshape(-1), j.reshape(-1)
    v00 = j * (nx + 1) + i
    v10 = v00 + 1
    v01 = v00 + (nx + 1)
    v11 = v01 + 1
    c = (nx + 1) * (ny + 1) + j * nx + i
    cells = np.vstack([
        np.column_stack([v00, v10, c]),
        np.column_stack([v10, v11, c]),
        np.column_stack([v11, v01, c]),
        np.column_stack([v01, v00, c]),
    ])

    facets = boundary_faces(cells, vertices.shape[0])
    return SimplicialMesh(
        vertices=vertices,
        cells=cells,
        facets=facets,
        facet_labels=label_box_facets(vertices, facets, bbox),
    )


def generate_kuhn_3d(nx: int, ny: int, nz: int, bbox: Optional[Bounds] = None) -> SimplicialMesh:
    """Split every grid cube into six tetrahedra sharing its main diagonal."""
    if min(nx, ny, nz) < 1:
        raise ValueError("nx, ny and nz must be at least 1.")
    bbox = tuple(bbox or ((0.0, 1.0), (0.0, 1.0), (0.0, 1.0)))
    axes = [np.linspace(lo, hi, n + 1) for (lo, hi), n in zip(bbox, (nx, ny, nz))]
    gx, gy, gz = np.meshgrid(*axes, indexing="ij")
    vertices = np.column_stack([gx.reshape(-1), gy.reshape(-1), gz.reshape(-1)])

    def vid(i, j, k):
        return (i * (ny + 1) + j) * (nz + 1) + k

    i, j, k = np.meshgrid(np.arange(nx), np.arange(ny), np.arange(nz), indexing="ij")
    i, j, k = i.reshape(-1), j.reshape(-1), k.reshape(-1)

    blocks = []
    for perm in itertools.permutations(range(3)):
        corner = [np.zeros_like(i), np.zeros_like(i), np.zeros_like(i)]
        path = [vid(i, j, k)]
        for axis in perm:
            corner[axis] = corner[axis] + 1
            path.append(vid(i + corner[0], j + corner[1], k + corner[2]))
        blocks.append(np.column_stack(path))
    cells = np.vstack(blocks)

    facets = boundary_faces(cells, vertices.shape[0])
    return SimplicialMesh(
        vertices=vertices,
        cells=cells,
        facets=facets,
        facet_labels=label_box_facets(vertices, facets, bbox),
    )
