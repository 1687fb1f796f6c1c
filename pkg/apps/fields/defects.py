"""Defect diagnostics: winding numbers of line fields and local minima of s."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.spatial import cKDTree

from apps.core.exceptions import FieldError
from apps.meshes.mesh import SimplicialMesh

from .fields import DirectorField, LineField

logger = logging.getLogger(__name__)

MIN_DEGREE = 1e-3
MIN_PROJECTED = 1e-6

# In-plane axes (e1, e2) with e1 x e2 along the plane normal.
_PLANE_AXES = {"x": (1, 2), "y": (2, 0), "z": (0, 1)}


@dataclass(frozen=True)
class LoopSpec:
    """A square loop in the plane {axis = level} (2D meshes ignore axis/level)."""

    center: Tuple[float, float]
    half_width: float
    axis: str = "z"
    level: float = 0.0
    samples_per_side: int = 64

    def label(self) -> str:
        return f"{self.axis}={self.level:g} around ({self.center[0]:g}, {self.center[1]:g})"


def plane_axes(mesh_dim: int, axis: str) -> Tuple[int, int]:
    if mesh_dim == 2:
        return (0, 1)
    if axis not in _PLANE_AXES:
        raise FieldError(f"Loop plane axis must be one of x, y, z, got {axis!r}.")
    return _PLANE_AXES[axis]


def loop_nodes_square(mesh: SimplicialMesh, spec: LoopSpec) -> np.ndarray:
    """Mesh nodes nearest to a counterclockwise square path, without repeats in a row."""
    a, b = plane_axes(mesh.dim, spec.axis)
    cx, cy = spec.center
    h = spec.half_width
    corners = np.array([[cx - h, cy - h], [cx + h, cy - h], [cx + h, cy + h], [cx - h, cy + h]])
    t = np.linspace(0.0, 1.0, spec.samples_per_side, endpoint=False)
    path2d = np.vstack([
        corners[k] + t[:, None] * (corners[(k + 1) % 4] - corners[k]) for k in range(4)
    ])
    points = np.zeros((path2d.shape[0], mesh.dim))
    points[:, a] = path2d[:, 0]
    points[:, b] = path2d[:, 1]
    if mesh.dim == 3:
        normal = 3 - a - b
        points[:, normal] = spec.level

    _, nearest = cKDTree(mesh.vertices).query(points)
    nodes = [int(nearest[0])]
    for node in nearest[1:]:
        if int(node) != nodes[-1]:
            nodes.append(int(node))
    while len(nodes) > 1 and nodes[-1] == nodes[0]:
        nodes.pop()
    return np.asarray(nodes, dtype=np.int64)


def winding_number(
    orientation: Union[LineField, DirectorField, np.ndarray],
    loop: Sequence[int],
    degree: Optional[np.ndarray] = None,
    axes: Tuple[int, int] = (0, 1),
    exact: bool = False,
) -> float:
    """Total rotation of the line direction along a closed loop over 2 pi.

    Directions are projected to the loop plane spanned by coordinate ``axes``
    and compared modulo pi, so the result is a multiple of 1/2. Positive
    for counterclockwise rotation with a counterclockwise loop.

    Raises:
        FieldError: |s| < 1e-3 or a vanishing in-plane projection on the loop.
    """
    vectors = np.asarray(getattr(orientation, "vectors", orientation), dtype=float)
    loop = np.asarray(loop, dtype=np.int64)
    if loop.size < 3:
        raise FieldError("A winding loop needs at least three nodes.")
    if degree is not None:
        s = np.abs(np.asarray(degree, dtype=float)[loop])
        if s.min() < MIN_DEGREE:
            node = int(loop[int(np.argmin(s))])
            raise FieldError(f"|s| = {s.min():.3e} at loop node {node}; the loop passes too close to a defect.")
    planar = vectors[loop][:, list(axes)]
    lengths = np.linalg.norm(planar, axis=1)
    if lengths.min() < MIN_PROJECTED:
        node = int(loop[int(np.argmin(lengths))])
        raise FieldError(f"Director at loop node {node} is normal to the loop plane.")

    angle = np.mod(np.arctan2(planar[:, 1], planar[:, 0]), np.pi)
    step = np.diff(np.append(angle, angle[0]))
    # Wrap into (-pi/2, pi/2].
    step = step - np.pi * np.ceil((step - np.pi / 2) / np.pi)
    total = float(step.sum()) / (2.0 * np.pi)
    if exact:
        return total
    return round(2.0 * total) / 2.0


def winding_on_loop(
    mesh: SimplicialMesh,
    orientation: Union[LineField, DirectorField],
    degree: Optional[np.ndarray],
    spec: LoopSpec,
) -> float:
    nodes = loop_nodes_square(mesh, spec)
    return winding_number(orientation, nodes, degree=degree, axes=plane_axes(mesh.dim, spec.axis))


def node_neighbour_minimum(mesh: SimplicialMesh, values: np.ndarray) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    low = np.full(mesh.n_nodes, np.inf)
    i, j = mesh.edges[:, 0], mesh.edges[:, 1]
    np.minimum.at(low, i, v[j])
    np.minimum.at(low, j, v[i])
    return low


def local_minima(
    mesh: SimplicialMesh,
    values: np.ndarray,
    interior_only: bool = True,
    below: Optional[float] = None,
) -> List[int]:
    """Nodes whose value is strictly below every neighbour's, by increasing value."""
    v = np.asarray(values, dtype=float)
    mask = v < node_neighbour_minimum(mesh, v)
    if interior_only:
        mask &= np.array([not labels for labels in mesh.node_labels])
    if below is not None:
        mask &= v < below
    nodes = np.flatnonzero(mask)
    return [int(n) for n in nodes[np.argsort(v[nodes], kind="stable")]]
