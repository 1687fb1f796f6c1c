"""Diffuse-interface colloids.

phi_eps(x) = phi_ref(d(x)) with phi_ref(t) = ((2/pi) arctan(-t/eps) + 1) / 2 and d
the signed distance to the colloid surface (negative inside). Surface
integrals over the colloid boundary are approximated by the bulk functional

    J_eps(f) = eps |S^{d-1}| / 2 * int f |grad phi_eps|^2.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence, Tuple, Union

import numpy as np

from apps.core.constants import sphere_measure
from apps.core.exceptions import CouplingError
from apps.fem.quadrature import patch_average
from apps.meshes.mesh import SimplicialMesh

logger = logging.getLogger(__name__)


def phi_reference(t: np.ndarray, eps: float) -> np.ndarray:
    return 0.5 * ((2.0 / np.pi) * np.arctan(-np.asarray(t, dtype=float) / eps) + 1.0)


@dataclass(frozen=True)
class SphereShape:
    center: Tuple[float, ...]
    radius: float

    def __post_init__(self) -> None:
        if not self.radius > 0.0:
            raise CouplingError(f"Sphere radius must be positive, got {self.radius!r}.")

    def signed_distance(self, mesh: SimplicialMesh) -> np.ndarray:
        c = np.asarray(self.center, dtype=float)
        if c.size != mesh.dim:
            raise CouplingError(f"Sphere center {self.center} does not match the {mesh.dim}D mesh.")
        return self.distance_at(mesh.vertices)

    def distance_at(self, points: np.ndarray) -> np.ndarray:
        return np.linalg.norm(points - np.asarray(self.center, dtype=float), axis=1) - self.radius


@dataclass(frozen=True, eq=False)
class AffineShape:
    """A reference shape placed by x = Z y + b; distances are pulled back through Z^-1."""

    reference: SphereShape
    matrix: np.ndarray
    offset: np.ndarray

    def distance_at(self, points: np.ndarray) -> np.ndarray:
        Z = np.asarray(self.matrix, dtype=float)
        if abs(np.linalg.det(Z)) < 1e-14:
            raise CouplingError("Affine colloid map is singular.")
        y = np.linalg.solve(Z, (points - np.asarray(self.offset, dtype=float)).T).T
        return self.reference.distance_at(y)

    def signed_distance(self, mesh: SimplicialMesh) -> np.ndarray:
        return self.distance_at(mesh.vertices)


@dataclass(frozen=True)
class NodalSignedDistance:
    """Signed distance read from the optional column of the mesh file."""

    def signed_distance(self, mesh: SimplicialMesh) -> np.ndarray:
        if mesh.signed_distance is None:
            raise CouplingError("Mesh file carries no signed-distance column.")
        return np.asarray(mesh.signed_distance, dtype=float)


Shape = Union[SphereShape, AffineShape, NodalSignedDistance]


@dataclass(frozen=True, eq=False)
class PhaseFieldColloid:
    mesh: SimplicialMesh
    eps: float
    phi: np.ndarray
    cell_gradients: np.ndarray
    nodal_gradients: np.ndarray
    shapes: Tuple[Shape, ...] = field(default_factory=tuple)

    @property
    def interface_weight(self) -> float:
        """|S^{d-1}| eps, the factor in front of the mass-lumped anchoring forms."""
        return sphere_measure(self.mesh.dim) * self.eps

    @property
    def nodal_gradient_sq(self) -> np.ndarray:
        return np.einsum("ni,ni->n", self.nodal_gradients, self.nodal_gradients)


def build_phase_field(
    mesh: SimplicialMesh,
    shapes: Union[Shape, Sequence[Shape]],
    eps: float,
) -> PhaseFieldColloid:
    """Nodal phi_eps, its per-cell P1 gradient and the patch-averaged nodal gradient.

    Several shapes are combined by summing their phase fields, which assumes
    the colloids are well separated compared with eps.
    """
    if not eps > 0.0:
        raise CouplingError(f"Phase-field thickness eps must be positive, got {eps!r}.")
    if not isinstance(shapes, (list, tuple)):
        shapes = (shapes,)
    if not shapes:
        raise CouplingError("At least one colloid shape is required.")
    phi = np.zeros(mesh.n_nodes)
    for shape in shapes:
        phi += phi_reference(shape.signed_distance(mesh), eps)
    grads = np.einsum("tak,ta->tk", mesh.cell_gradients, phi[mesh.cells])
    nodal = patch_average(mesh, grads)
    h = mesh.max_diameter
    if h > eps:
        logger.warning("Mesh size h = %.3g exceeds the phase-field thickness eps = %.3g.", h, eps)
    for arr in (phi, grads, nodal):
        arr.setflags(write=False)
    return PhaseFieldColloid(
        mesh=mesh, eps=eps, phi=phi, cell_gradients=grads, nodal_gradients=nodal, shapes=tuple(shapes)
    )


def surface_functional(colloid: PhaseFieldColloid, values: np.ndarray) -> float:
    """J_eps(f), exact for P1 f against the piecewise constant |grad phi_h|^2."""
    mesh = colloid.mesh
    f = np.asarray(values, dtype=float)
    if f.shape != (mesh.n_nodes,):
        raise CouplingError(f"Expected {mesh.n_nodes} nodal values, got shape {f.shape}.")
    g2 = np.einsum("tk,tk->t", colloid.cell_gradients, colloid.cell_gradients)
    integral = float(np.sum(g2 * mesh.cell_volumes * f[mesh.cells].mean(axis=1)))
    return 0.5 * colloid.interface_weight * integral
